import asyncio
import itertools
import logging
from dataclasses import dataclass, field

from core_logic.classifier import analyze_model
from hqmm_lib.config import APP_CONFIG, v_print
from hqmm_lib.errors import SweepSpecError
from hqmm_lib.param_tools import parameter_grid
from services.catalog import build, get_entry, perturbed_coin_extras

REPORT_COLUMNS = ("h_mu", "i_xy", "c_q", "c_q_diagonal", "e_curve_last", "case_label", "e")
COIN_COLUMNS = ("i_3state", "c_q_markov", "c_q_3state", "c_cl_lower_bound", "i_markov", "h_p_3state", "c_epsilon")
SWEEP_COLUMNS = REPORT_COLUMNS + COIN_COLUMNS
DEFAULT_COLUMNS = ("h_mu", "i_xy", "c_q", "c_q_diagonal", "e_curve_last", "case_label")
COIN_IDS = ("perturbed-coin-em", "perturbed-coin-3state")


@dataclass(frozen=True)
class SweepSpec:
    catalog_id: str
    parameter: str
    start: float
    stop: float
    step: float
    fixed: dict = field(default_factory=dict)     # name -> list of values, swept as a cartesian product
    columns: tuple = DEFAULT_COLUMNS
    output_path: str = None
    base: str = "2"
    block_depth: int = None
    assert_epsilon_machine: bool = False

    def __post_init__(self):
        if self.step <= 0:
            raise SweepSpecError(f"Sweep step must be positive, got {self.step}.")
        if self.start > self.stop:
            raise SweepSpecError(f"Sweep start {self.start} exceeds stop {self.stop}.")
        if not self.columns:
            raise SweepSpecError("A sweep needs at least one output column.")
        unknown = [c for c in self.columns if c not in SWEEP_COLUMNS]
        if unknown:
            raise SweepSpecError(f"Unknown sweep column(s) {unknown}; choose from {', '.join(SWEEP_COLUMNS)}.")

        entry = get_entry(self.catalog_id)
        if entry.kind != "hmm":
            raise SweepSpecError(f"Catalog entry '{self.catalog_id}' is not a classical HMM and cannot be swept.")
        names = {spec.name for spec in entry.parameters}
        if self.parameter not in names:
            raise SweepSpecError(f"Catalog entry '{self.catalog_id}' has no parameter '{self.parameter}' "
                                 f"(parameters: {', '.join(sorted(names)) or 'none'}).")
        if self.parameter in self.fixed:
            raise SweepSpecError(f"Parameter '{self.parameter}' is both swept and fixed.")
        extra = [name for name in self.fixed if name not in names]
        if extra:
            raise SweepSpecError(f"Catalog entry '{self.catalog_id}' has no parameter(s) {extra}.")
        if self.catalog_id not in COIN_IDS and any(c in COIN_COLUMNS for c in self.columns):
            raise SweepSpecError(f"Columns {', '.join(COIN_COLUMNS)} are only defined for the perturbed coin.")

    @property
    def header(self):
        return [self.parameter, *self.fixed, *self.columns]

    def grid_points(self):
        # Parameter dicts in output order: fixed combinations outermost, swept value innermost.
        swept = parameter_grid(self.start, self.stop, self.step)
        fixed_names = list(self.fixed)
        points = []
        for combination in itertools.product(*(self.fixed[name] for name in fixed_names)):
            for value in swept:
                points.append({self.parameter: value, **dict(zip(fixed_names, combination))})
        return points


def _exact_e_available(model, spec, unifilar):
    if "not-epsilon-machine" in model.flags or not unifilar:
        return False
    return spec.assert_epsilon_machine or "epsilon-machine" in model.flags


def evaluate_point(spec, params):
    # One CSV row (values keyed by column) for a single grid point.
    model = build(spec.catalog_id, params)
    row = {name: params[name] for name in [spec.parameter, *spec.fixed]}

    if any(c in REPORT_COLUMNS for c in spec.columns):
        report = analyze_model(model, spec.base, spec.block_depth, spec.assert_epsilon_machine)
        e_curve_last = report.excess.get("last", 0.0)
        values = {"h_mu": report.h_mu, "i_xy": report.i_xy, "c_q": report.c_q,
                  "c_q_diagonal": report.c_q_diagonal, "e_curve_last": e_curve_last,
                  "case_label": report.case_label,
                  "e": report.i_xy if _exact_e_available(model, spec, report.unifilar) else e_curve_last}
        row.update({c: values[c] for c in spec.columns if c in values})

    if spec.catalog_id in COIN_IDS:
        extras = perturbed_coin_extras(params["eps"], spec.base)
        row.update({c: extras[c] for c in spec.columns if c in COIN_COLUMNS})
        if "e" in spec.columns:
            row["e"] = extras["e"]
    return row


async def run_sweep(spec, jobs=None, progress=None, task_id=None, verbose_flag=False):
    # Evaluates every grid point in worker threads; rows come back in grid order.
    jobs = max(1, int(jobs or APP_CONFIG["default_jobs"]))
    points = spec.grid_points()
    msg = f"Sweeping {spec.parameter} over {len(points)} point(s) of '{spec.catalog_id}' with {jobs} worker(s)."
    v_print(msg, verbose_flag); logging.info(msg)
    if progress is not None:
        progress.update(task_id, total=len(points), description=f"[blue]Sweeping {spec.catalog_id}...")

    semaphore = asyncio.Semaphore(jobs)

    async def worker(params):
        async with semaphore:
            row = await asyncio.to_thread(evaluate_point, spec, params)
        if progress is not None:
            progress.update(task_id, advance=1)
        return row

    rows = await asyncio.gather(*(worker(p) for p in points))
    if progress is not None:
        progress.update(task_id, description="[green]Sweep complete")
    logging.info(f"Sweep of '{spec.catalog_id}' finished: {len(rows)} row(s).")
    return rows
