import argparse
import json
import logging
import os

from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

from core_logic.classifier import analyze_model
from core_logic.hmm_core import sample, validate
from core_logic.quantum_model import GenericHqmm, induce_quantum_model, simulate_generic_hqmm, simulate_hqmm
from core_logic.verification import verify_hqmm, verify_model
from hqmm_lib.config import APP_CONFIG, console, load_app_config, setup_logging, status_console, v_print
from hqmm_lib.errors import (
    BudgetExceededError, CatalogParameterError, ConsistencyError, HqmmError, HqmmStructureError,
    ModelFileError, ModelStructureError, SweepSpecError,
)
from hqmm_lib.model_io import dumps_document, load_model_file
from hqmm_lib.param_tools import normalize_param_name, parse_param_assignments, single_values
from reporting.report_generator import (
    display_run_statistics, render_catalog, render_report, render_verification, write_sweep_csv,
)
from services.catalog import build, emit, get_entry, list_entries
from services.sweep_runner import DEFAULT_COLUMNS, SWEEP_COLUMNS, SweepSpec, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INCONSISTENT = 3


# Bad command-line usage detected after argument parsing
class UsageError(Exception):
    pass


# --- ARGUMENT PARSING ---

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    common.add_argument("--json", action="store_true", help="Machine-readable JSON output.")
    common.add_argument("--base", choices=["2", "e"], default=APP_CONFIG["default_log_base"],
                        help=f"Logarithm base (config default: {APP_CONFIG['default_log_base']})")
    common.add_argument("--out", type=str, help="Write the result to this file instead of stdout.")
    common.add_argument("--force", action="store_true", help="Overwrite an existing --out file.")

    model_ref = argparse.ArgumentParser(add_help=False)
    model_ref.add_argument("--catalog", type=str, help="Catalog id of a built-in model.")
    model_ref.add_argument("--model", type=str, help="Path to a model file (JSON).")
    model_ref.add_argument("--param", action="append", default=[], metavar="K=V",
                           help="Catalog parameter, repeatable (e.g. --param p=0.5).")

    depth = argparse.ArgumentParser(add_help=False)
    depth.add_argument("--block-depth", type=int, default=APP_CONFIG["default_block_depth"],
                       help=f"Largest L of the excess curve (config default: {APP_CONFIG['default_block_depth']})")
    depth.add_argument("--assert-epsilon-machine", action="store_true",
                       help="Treat the model as an epsilon-machine: H(mu) is C_epsilon and E = I(X;Y).")

    parser = argparse.ArgumentParser(description="HQMM Inspector: entropy chain, quantum models and equality "
                                                 "cases of hidden Markov models.")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", parents=[common, model_ref, depth], help="Full analysis report.")
    analyze.add_argument("--assert-minimal", action="store_true", help="Treat H(mu) as the generative complexity C_Cl.")

    sweep = commands.add_parser("sweep", parents=[common, depth], help="Parameter sweep to CSV.")
    sweep.add_argument("--catalog", type=str, required=True, help="Catalog id to sweep.")
    sweep.add_argument("--sweep", nargs=4, required=True, metavar=("NAME", "START", "STOP", "STEP"),
                       help="Swept parameter and its inclusive grid.")
    sweep.add_argument("--param", action="append", default=[], metavar="K=V[,V...]",
                       help="Fixed parameter; a comma list adds one block of rows per value.")
    sweep.add_argument("--columns", type=str, default=",".join(DEFAULT_COLUMNS),
                       help=f"Comma-separated output columns from: {', '.join(SWEEP_COLUMNS)}")
    sweep.add_argument("--jobs", type=int, default=APP_CONFIG["default_jobs"],
                       help=f"Parallel workers (config default: {APP_CONFIG['default_jobs']})")

    sample_cmd = commands.add_parser("sample", parents=[common, model_ref], help="Sample a symbol stream.")
    sample_cmd.add_argument("--steps", type=int, default=APP_CONFIG["default_steps"])
    sample_cmd.add_argument("--seed", type=int, default=APP_CONFIG["default_seed"])
    sample_cmd.add_argument("--quantum", action="store_true", help="Simulate the induced quantum model instead.")

    verify = commands.add_parser("verify", parents=[common, model_ref, depth], help="Run the invariant battery.")
    verify.add_argument("--deep", action="store_true", help="Add the sampling vs exact-distribution TV tests.")
    verify.add_argument("--seed", type=int, default=APP_CONFIG["default_seed"])
    verify.add_argument("--steps", type=int, default=APP_CONFIG["deep_steps"],
                        help=f"Samples per deep test (config default: {APP_CONFIG['deep_steps']})")

    catalog = commands.add_parser("catalog", help="List or emit built-in models.")
    catalog_commands = catalog.add_subparsers(dest="catalog_command", required=True)
    catalog_commands.add_parser("list", parents=[common], help="List catalog entries.")
    emit_cmd = catalog_commands.add_parser("emit", parents=[common], help="Write a catalog model as a model file.")
    emit_cmd.add_argument("id", help="Catalog id.")
    emit_cmd.add_argument("--param", "--params", action="append", default=[], metavar="K=V")
    return parser


def _parse_params(assignments):
    try:
        return parse_param_assignments(assignments)
    except ValueError as e:
        raise UsageError(str(e)) from e


def resolve_model(args):
    # Returns (model, catalog entry or None) for --catalog/--model.
    if bool(args.catalog) == bool(args.model):
        raise UsageError("Give exactly one of --catalog <id> or --model <path>.")
    if args.model:
        if args.param:
            raise UsageError("--param only applies to --catalog models.")
        return load_model_file(args.model), None
    entry = get_entry(args.catalog)
    return build(args.catalog, single_values(_parse_params(args.param))), entry


def _check_out_path(args):
    if args.out and os.path.exists(args.out) and not args.force:
        raise FileExistsError(f"Output file {args.out} exists; pass --force to overwrite it.")


def _emit_text(text, args):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        status_console.print(f"  Output written to: [italic link=file://{os.path.abspath(args.out)}]{args.out}[/italic link]")
        logging.info(f"Output written to {args.out}")
    elif text:
        console.out(text, highlight=False, end="")


def _report_validation_failure(model, report, args):
    findings = ", ".join(f"{v.kind} at {v.location}" for v in report.errors)
    msg = f"Model '{model.name}' fails validation: {findings}"
    status_console.print(f"[red]{msg}[/red]"); logging.error(msg)
    if args.json:
        console.out(json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", highlight=False, end="")
    return EXIT_INVALID


# --- COMMANDS ---

async def cmd_analyze(args, run_stats):
    model, _ = resolve_model(args)
    if isinstance(model, GenericHqmm):
        raise UsageError(f"'{model.name}' is a generic HQMM; analyze needs a classical HMM (try verify).")
    _check_out_path(args)
    validation = validate(model)
    if not validation.ok:
        return _report_validation_failure(model, validation, args)

    report = analyze_model(model, args.base, args.block_depth, args.assert_epsilon_machine, args.assert_minimal)
    render_report(report, args.json, args.out)
    run_stats["Model"] = model.name
    run_stats["Equality Case"] = report.case_label
    run_stats["Warnings"] = len(report.warnings)
    return EXIT_OK


async def cmd_sweep(args, run_stats):
    name, start, stop, step = args.sweep
    fixed = _parse_params(args.param)
    columns = tuple(c.strip() for c in args.columns.split(",") if c.strip())
    try:
        spec = SweepSpec(args.catalog, normalize_param_name(name), float(start), float(stop),
                         float(step), fixed, columns, args.out or APP_CONFIG["default_sweep_output"],
                         args.base, args.block_depth, args.assert_epsilon_machine)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if os.path.exists(spec.output_path) and not args.force:
        raise FileExistsError(f"Output file {spec.output_path} exists; pass --force to overwrite it.")

    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), BarColumn(),
                  TextColumn("{task.completed} of {task.total}"), TimeElapsedColumn(),
                  console=status_console, transient=True) as progress_manager:
        task_id = progress_manager.add_task("Sweep init...", total=1)
        rows = await run_sweep(spec, args.jobs, progress_manager, task_id, args.verbose)

    write_sweep_csv(spec.output_path, spec.header, rows)
    if args.json:
        # the CSV is the result; stdout only carries where it went
        summary = {"catalog": spec.catalog_id, "parameter": spec.parameter, "output": spec.output_path,
                   "rows": len(rows), "header": list(spec.header)}
        console.out(json.dumps(summary, indent=2, ensure_ascii=False) + "\n", highlight=False, end="")
    run_stats["Grid Points"] = len(rows)
    run_stats["Output File"] = spec.output_path
    return EXIT_OK


async def cmd_sample(args, run_stats):
    model, _ = resolve_model(args)
    if args.steps < 0:
        raise UsageError(f"--steps must be nonnegative, got {args.steps}.")
    _check_out_path(args)
    if isinstance(model, GenericHqmm):
        result = simulate_generic_hqmm(model, args.steps, args.seed)
    else:
        validation = validate(model)
        if not validation.ok:
            return _report_validation_failure(model, validation, args)
        if args.quantum:
            result = simulate_hqmm(induce_quantum_model(model, args.base), args.steps, args.seed)
        else:
            result = sample(model, args.steps, args.seed)

    text = result.as_text()
    if args.json:
        payload = {"model": model.name, "steps": args.steps, "seed": args.seed,
                   "quantum": bool(args.quantum or isinstance(model, GenericHqmm)), "symbols": text}
        _emit_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", args)
    else:
        _emit_text(text + "\n" if text else "", args)
    run_stats["Model"] = model.name
    run_stats["Steps"] = args.steps
    return EXIT_OK


async def cmd_verify(args, run_stats):
    model, entry = resolve_model(args)
    if isinstance(model, GenericHqmm):
        reference = build(entry.reference) if entry is not None and entry.reference else None
        summary = verify_hqmm(model, args.base, reference, args.deep, args.seed, args.steps)
    else:
        summary = verify_model(model, args.base, args.block_depth, args.deep, args.seed, args.steps)
    render_verification(summary, args.json)
    run_stats["Checks Run"] = len(summary.checks)
    run_stats["Checks Failed"] = sum(1 for c in summary.checks if not c.passed)
    if summary.passed:
        return EXIT_OK
    return EXIT_INVALID if summary.validation_failed else EXIT_INCONSISTENT


async def cmd_catalog(args, run_stats):
    if args.catalog_command == "list":
        render_catalog(list_entries(), args.json)
        return EXIT_OK
    _check_out_path(args)
    document = emit(args.id, single_values(_parse_params(args.param)))
    _emit_text(dumps_document(document), args)
    run_stats["Emitted"] = args.id
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "sample": cmd_sample,
            "verify": cmd_verify, "catalog": cmd_catalog}


async def run_cli(project_root_dir, argv=None):
    # Parses argv, runs one command and returns its exit code.
    load_app_config(project_root_dir, quiet=True)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage; our contract reserves 2 for validation failures
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    setup_logging(project_root_dir, args.verbose)
    logging.info(f"Command: {args.command}, arguments: {vars(args)}")
    v_print(f"Settings: base={args.base}, tau_stoch={APP_CONFIG['tau_stoch']}, "
            f"word_budget={APP_CONFIG['word_budget']}", args.verbose)

    run_stats = {}
    try:
        code = await COMMANDS[args.command](args, run_stats)
    except (UsageError, CatalogParameterError, SweepSpecError, BudgetExceededError) as e:
        status_console.print(f"[red]Error: {e}[/red]"); logging.error(str(e))
        return EXIT_USAGE
    except (ModelFileError, FileExistsError) as e:
        status_console.print(f"[red]Error: {e}[/red]"); logging.error(str(e))
        return EXIT_USAGE
    except (ModelStructureError, HqmmStructureError) as e:
        status_console.print(f"[red]Validation failed: {e}[/red]"); logging.error(str(e))
        return EXIT_INVALID
    except ConsistencyError as e:
        status_console.print(Panel(f"[bold red]Internal consistency error[/bold red]\n{e}", expand=False, border_style="red"))
        logging.critical(f"Internal consistency error: {e}")
        return EXIT_INCONSISTENT
    except HqmmError as e:
        status_console.print(f"[red]Error: {e}[/red]"); logging.error(str(e), exc_info=True)
        return EXIT_INCONSISTENT

    if args.verbose and run_stats:
        display_run_statistics(run_stats, status_console)
    logging.info(f"Command '{args.command}' finished with exit code {code}.")
    return code
