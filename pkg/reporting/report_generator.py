import csv
import io
import json
import logging
import os

import rich.box  # For table box styles
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from hqmm_lib.config import console, status_console
from hqmm_lib.param_tools import format_number


# --- ANALYSIS REPORT ---
def report_json(report):
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _fmt(value):
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def report_table(report):
    unit = "bits" if report.base == "2" else "nats"
    params = ", ".join(f"{k}={format_number(v)}" for k, v in report.parameters.items()) or "none"
    table = Table(title=f"Analysis of '{report.name}' ({params})", show_header=True,
                  header_style="bold magenta", box=rich.box.SIMPLE, padding=(0, 1))
    table.add_column("Quantity", style="cyan", no_wrap=True)
    table.add_column(f"Value ({unit})", style="bold white", justify="right")

    excess = report.excess
    rows = [
        (report.h_mu_label, report.h_mu),
        ("I(X;Y)", report.i_xy),
        ("C_q (induced)", report.c_q),
        ("C_q (diagonal)", report.c_q_diagonal),
        (f"E_L (L={excess.get('max_length', 'n/a')})", excess.get("last")),
        ("E_L increment", excess.get("last_increment")),
        ("entropy rate estimate", excess.get("entropy_rate_estimate")),
        ("E (exact)", report.e_exact),
        ("Holevo gap", report.holevo.get("gap")),
    ]
    for name, value in rows:
        table.add_row(name, _fmt(value))
    table.add_section()
    table.add_row("equality case", f"{report.case_label} ({report.gram_class})")
    table.add_row("commuting states", _fmt(report.commuting))
    table.add_row("unifilar", _fmt(report.unifilar))
    table.add_row("quantum advantage", _fmt(report.quantum_advantage))
    table.add_row("spectrum", ", ".join(f"{v:.6g}" for v in report.spectrum))
    witnesses = "; ".join("({}, {}, {}, {})".format(*w) for w in report.merging_pairs) or "none"
    table.add_row("merging witnesses (j, k, l, r)", witnesses)
    return table


def render_report(report, as_json=False, out_path=None):
    """Prints the report on stdout, or writes it to out_path (JSON or plain text)."""
    if out_path:
        if as_json:
            text = report_json(report)
        else:
            recorder = Console(file=io.StringIO(), record=True, width=100)
            recorder.print(report_table(report))
            text = recorder.export_text()
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
        status_console.print(f"  Report written to: [italic link=file://{os.path.abspath(out_path)}]{out_path}[/italic link]")
        logging.info(f"Report for '{report.name}' written to {out_path}")
    elif as_json:
        console.out(report_json(report), highlight=False, end="")
    else:
        console.print(report_table(report))

    for message in report.warnings:
        status_console.print(f"[yellow]Warning: {message}[/yellow]")
    if report.h_mu_label == "H(mu)":
        status_console.print("[dim]H(mu) is the internal state entropy of this model; pass --assert-minimal or "
                             "--assert-epsilon-machine to read it as C_Cl or C_epsilon.[/dim]")


# --- SWEEP, VERIFY & CATALOG OUTPUT ---
def write_sweep_csv(out_path, header, rows):
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(row[name]) for name in header])
    status_console.print(Panel(f"Wrote {len(rows)} row(s) to {out_path}", title="[green]Sweep Output[/green]", expand=False))
    logging.info(f"Sweep CSV with {len(rows)} row(s) written to {out_path}")


def render_verification(summary, as_json=False):
    if as_json:
        console.out(json.dumps(summary.to_dict(), indent=2, ensure_ascii=False) + "\n", highlight=False, end="")
        return
    table = Table(title=f"Verification of '{summary.model_name}'", show_header=True,
                  header_style="bold magenta", box=rich.box.ROUNDED, padding=(0, 1))
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    table.add_column("Detail", style="dim")
    for check in summary.checks:
        table.add_row(check.name, "[green]pass[/green]" if check.passed else "[bold red]FAIL[/bold red]", check.detail)
    console.print(table)
    verdict = "[bold green]All checks passed.[/bold green]" if summary.passed else "[bold red]Some checks failed.[/bold red]"
    console.print(verdict)


def render_catalog(entries, as_json=False):
    if as_json:
        listing = [{"id": e.id, "kind": e.kind, "locus": e.locus,
                    "parameters": {s.name: {"range": s.constraint(), "default": s.default} for s in e.parameters}}
                   for e in entries]
        console.out(json.dumps(listing, indent=2, ensure_ascii=False) + "\n", highlight=False, end="")
        return
    table = Table(title="Catalog", show_header=True, header_style="bold magenta", box=rich.box.ROUNDED, padding=(0, 1))
    table.add_column("Id", style="cyan", no_wrap=True)
    table.add_column("Kind")
    table.add_column("Parameters")
    table.add_column("Model", style="dim")
    for e in entries:
        params = ", ".join(f"{s.constraint()} (default {s.default:g})" for s in e.parameters) or "none"
        table.add_row(e.id, e.kind, params, e.locus)
    console.print(table)


def display_run_statistics(stats, console_instance):
    stats_table = Table(title="Run Statistics", show_header=True, header_style="bold magenta", box=rich.box.ROUNDED, padding=(0, 1))
    stats_table.add_column("Metric", style="dim cyan", width=40)
    stats_table.add_column("Value", style="bold white")

    for key, value in stats.items():
        stats_table.add_row(key, str(value))

    console_instance.print(stats_table)
    logging.info(f"Run Statistics: {stats}")
