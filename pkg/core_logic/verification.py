"""Invariant battery behind the `verify` command.

Each check produces a CheckResult; a failed check never raises, so one run
reports every problem it finds. Validation errors stop the battery early since
none of the later quantities are meaningful for an invalid model.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from core_logic.alt_quantum import build_diagonal_construction
from core_logic.classifier import (
    ModelMetrics, assert_impossible_cases, capped_block_depth, check_case, classify_gram, merging_criterion,
)
from core_logic.hmm_core import (
    empirical_block_distribution, max_length_within_budget, sample, total_variation, validate, word_distribution,
)
from core_logic.info_metrics import excess_curve
from core_logic.quantum_model import (
    density_spectrum, full_density_spectrum, holevo_quantity, holevo_report, hqmm_word_distribution,
    induce_quantum_model, simulate_generic_hqmm, simulate_hqmm, states_commute,
)
from hqmm_lib.config import APP_CONFIG, tolerance
from hqmm_lib.errors import HqmmError

VALIDATION_CHECK = "validation"


# --- RESULTS ---
@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationSummary:
    model_name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def validation_failed(self):
        return any(c.name == VALIDATION_CHECK and not c.passed for c in self.checks)

    def add(self, name, passed, detail=""):
        result = CheckResult(name, bool(passed), detail)
        self.checks.append(result)
        log = logging.info if result.passed else logging.error
        log(f"verify '{self.model_name}': {name} {'passed' if result.passed else 'FAILED'} {detail}".rstrip())
        return result

    def to_dict(self):
        return {"model": self.model_name, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


def _run(summary, name, check):
    # Runs check() -> (passed, detail); library errors count as a failure of that check.
    try:
        passed, detail = check()
    except HqmmError as e:
        passed, detail = False, f"{type(e).__name__}: {e}"
    return summary.add(name, passed, detail)


def _tv_check(symbols, exact, length, m, threshold):
    tv = total_variation(empirical_block_distribution(symbols, length, m), exact)
    return tv <= threshold, f"TV = {tv:.4g} at L={length} over {len(symbols)} symbols (threshold {threshold:g})"


# --- HMM BATTERY ---
def verify_model(model, base="2", block_depth=None, deep=False, seed=0, steps=None):
    summary = VerificationSummary(model.name)
    tol = 10 * tolerance("tau_stoch")

    report = validate(model)
    findings = "; ".join(f"{v.kind} at {v.location}" for v in report.violations)
    summary.add(VALIDATION_CHECK, report.ok, findings)
    if not report.ok:
        return summary

    qm = induce_quantum_model(model, base)
    metrics = ModelMetrics.from_quantum_model(qm)
    depth, _ = capped_block_depth(model, block_depth)

    def chain():
        curve = excess_curve(model, depth, base)
        values = [("E_L", curve.last), ("I(X;Y)", metrics.i_xy), ("C_q", metrics.c_q), ("H(mu)", metrics.h_mu)]
        if report.has("non-invariant μ"):
            values = values[1:]
        broken = [f"{a} > {b}" for (a, x), (b, y) in zip(values, values[1:]) if x > y + tol]
        text = ", ".join(f"{name}={value:.10g}" for name, value in values)
        return not broken, (f"broken: {', '.join(broken)}; " if broken else "") + text

    def holevo():
        h = holevo_report(qm)
        # overlap test and commutator test must agree, and both must match the gap
        commutator = states_commute(qm)
        consistent = h.commuting == commutator == (h.gap <= tol)
        detail = f"gap = {h.gap:.4g}, commuting = {h.commuting}, commutators vanish = {commutator}"
        if qm.dimension <= APP_CONFIG["spectrum_oracle_max_dim"]:
            # pure code states: chi of the ensemble is C_q itself
            chi = holevo_quantity([np.outer(v, v) for v in qm.state_vectors], qm.weights, qm.base)
            consistent = consistent and abs(chi - h.rhs) <= tol
            detail += f", chi = {chi:.10g}"
        return h.gap >= -tol and consistent, detail

    def case():
        label = {"orthogonal": "i", "zero-one-with-duplicates": "iii", "general": "v"}[classify_gram(qm.gram, qm.weights)]
        notes = check_case(label, metrics, model.name)
        legal = assert_impossible_cases(metrics)
        return legal, f"case {label}" + (f" ({'; '.join(notes)})" if notes else "")

    def merging():
        witnesses = merging_criterion(model)
        off = qm.gram[np.triu_indices(model.n, k=1)]
        orthogonal = bool(np.all(off <= tolerance("tau_zero")))
        return (not witnesses) == orthogonal, f"{len(witnesses)} witness(es), Gram orthogonal = {orthogonal}"

    def spectrum():
        if model.n * model.m > APP_CONFIG["spectrum_oracle_max_dim"]:
            return True, f"skipped (dimension {model.n * model.m})"
        fast = density_spectrum(qm)
        full = full_density_spectrum(qm)
        padded = np.zeros(len(full))
        padded[:len(fast)] = fast
        gap = float(np.max(np.abs(padded - np.clip(full, 0.0, None))))
        return gap <= 1e-9, f"max eigenvalue difference {gap:.3g}"

    def diagonal():
        construction = build_diagonal_construction(model, base)
        return True, f"C_q(diagonal) = {construction.c_q_tilde:.10g} = H(mu)"

    for name, check in [("entropy chain", chain), ("holevo bound", holevo), ("equality case", case),
                        ("merging criterion", merging), ("spectrum oracle", spectrum),
                        ("diagonal construction", diagonal)]:
        _run(summary, name, check)

    if deep:
        steps = steps or APP_CONFIG["deep_steps"]
        length = min(APP_CONFIG["deep_block_length"], max_length_within_budget(model.m))
        threshold = APP_CONFIG["deep_tv_threshold"]
        exact = word_distribution(model, length).dense()
        _run(summary, "classical sampling", lambda: _tv_check(
            sample(model, steps, seed).symbols, exact, length, model.m, threshold))
        _run(summary, "quantum simulation", lambda: _tv_check(
            simulate_hqmm(qm, steps, seed).symbols, exact, length, model.m, threshold))
    return summary


# --- HQMM BATTERY ---
def verify_hqmm(h, base="2", reference=None, deep=False, seed=0, steps=None):
    """Checks a generic HQMM: normalized word distributions, and agreement with a classical
    reference model when one is known to generate the same process."""
    summary = VerificationSummary(h.name)
    summary.add(VALIDATION_CHECK, True, f"trace preserving, dimension {h.dimension}")
    max_length = min(4, max_length_within_budget(h.m))

    def normalization():
        totals = [hqmm_word_distribution(h, length, base).total() for length in range(1, max_length + 1)]
        drift = max(abs(t - 1.0) for t in totals)
        return drift <= 1e-9, f"max |sum P(w) - 1| = {drift:.3g} for L <= {max_length}"

    _run(summary, "word normalization", normalization)

    if reference is not None:
        def against_reference():
            worst = 0.0
            for length in range(1, max_length + 1):
                quantum = hqmm_word_distribution(h, length, base).dense()
                classical = word_distribution(reference, length).dense()
                worst = max(worst, float(np.max(np.abs(quantum - classical))))
            return worst <= 1e-9, f"max word probability difference vs '{reference.name}' {worst:.3g}"

        _run(summary, "reference word distribution", against_reference)

    if deep:
        steps = steps or APP_CONFIG["deep_steps"]
        length = min(APP_CONFIG["deep_block_length"], max_length)
        exact = hqmm_word_distribution(h, length, base).dense()
        _run(summary, "quantum simulation", lambda: _tv_check(
            simulate_generic_hqmm(h, steps, seed).symbols, exact, length, h.m, APP_CONFIG["deep_tv_threshold"]))
    return summary
