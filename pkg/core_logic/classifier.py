import logging
from dataclasses import dataclass, field

import numpy as np

from core_logic.alt_quantum import build_diagonal_construction
from core_logic.hmm_core import is_unifilar, max_length_within_budget, validate
from core_logic.info_metrics import base_tag, channel_mutual_information, excess_curve, shannon_entropy
from core_logic.quantum_model import holevo_report, induce_quantum_model, off_diagonal_overlaps
from hqmm_lib.config import APP_CONFIG, tolerance
from hqmm_lib.errors import ConsistencyError, ModelStructureError

GRAM_ORTHOGONAL = "orthogonal"
GRAM_ZERO_ONE = "zero-one-with-duplicates"
GRAM_GENERAL = "general"

_CASE_FOR_GRAM = {GRAM_ORTHOGONAL: "i", GRAM_ZERO_ONE: "iii", GRAM_GENERAL: "v"}


def _chain_tol():
    return 10 * tolerance("tau_stoch")


# --- MERGING CRITERION ---

@dataclass(frozen=True)
class MergeWitness:
    # States j < k both move to state l while emitting symbol r.
    j: int
    k: int
    l: int
    r: int

    def labels(self, model):
        return (model.state_labels[self.j], model.state_labels[self.k],
                model.state_labels[self.l], model.symbol_labels[self.r])


def merging_criterion(model, tol=None):
    tol = tolerance("tau_zero") if tol is None else tol
    witnesses = []
    for r in range(model.m):
        for l in range(model.n):
            sources = np.nonzero(model.transitions[r, :, l] > tol)[0]
            for a, j in enumerate(sources):
                for k in sources[a + 1:]:
                    witnesses.append(MergeWitness(int(j), int(k), l, r))
    witnesses.sort(key=lambda w: (w.j, w.k, w.l, w.r))
    return witnesses


# --- GRAM STRUCTURE & CASES ---

def classify_gram(gram, weights):
    tau_zero = tolerance("tau_zero")
    overlaps = off_diagonal_overlaps(gram, weights)
    if np.all(overlaps <= tau_zero):
        return GRAM_ORTHOGONAL
    if np.all((overlaps <= tau_zero) | (overlaps >= 1.0 - tau_zero)):
        return GRAM_ZERO_ONE
    return GRAM_GENERAL


@dataclass(frozen=True, eq=False)
class ModelMetrics:
    h_mu: float
    i_xy: float
    c_q: float
    overlaps: np.ndarray    # off-diagonal Gram entries between weighted states

    @classmethod
    def from_quantum_model(cls, qm):
        return cls(shannon_entropy(qm.weights, qm.base), channel_mutual_information(qm.source, qm.base),
                   qm.c_q, off_diagonal_overlaps(qm.gram, qm.weights))


def assert_impossible_cases(metrics):
    """False when the numbers land in one of the two equality patterns that cannot occur:
    I = C_q < H(mu) with a strictly fractional overlap, or I < C_q = H(mu)."""
    tol = _chain_tol()
    tau_zero = tolerance("tau_zero")
    fractional = bool(np.any((metrics.overlaps > tau_zero) & (metrics.overlaps < 1.0 - tau_zero)))
    equal_below = (abs(metrics.i_xy - metrics.c_q) <= tol and metrics.c_q < metrics.h_mu - tol and fractional)
    strict_then_equal = metrics.i_xy < metrics.c_q - tol and abs(metrics.c_q - metrics.h_mu) <= tol
    return not equal_below and not strict_then_equal


def check_chain(metrics, name, excess_last=None):
    tol = _chain_tol()
    links = [("I(X;Y)", metrics.i_xy, "C_q", metrics.c_q), ("C_q", metrics.c_q, "H(mu)", metrics.h_mu)]
    if excess_last is not None:
        links.insert(0, ("E_L", excess_last, "I(X;Y)", metrics.i_xy))
    for low_name, low, high_name, high in links:
        if low > high + tol:
            raise ConsistencyError(f"Entropy chain broken for '{name}': {low_name} = {low:.12g} exceeds "
                                   f"{high_name} = {high:.12g}.")


def check_case(case_label, metrics, name):
    # Raises on numbers that contradict the structural label; returns warnings for near-degenerate gaps.
    tol = _chain_tol()
    h, i, c = metrics.h_mu, metrics.i_xy, metrics.c_q
    if case_label == "i":
        if abs(c - h) > tol or abs(i - c) > tol:
            raise ConsistencyError(f"'{name}' has orthogonal quantum states but I={i:.12g}, C_q={c:.12g}, "
                                   f"H(mu)={h:.12g} are not all equal.")
        return []
    if case_label == "iii":
        if abs(i - c) > tol or c >= h - tol:
            raise ConsistencyError(f"'{name}' has duplicate quantum states but the relation I = C_q < H(mu) "
                                   f"fails (I={i:.12g}, C_q={c:.12g}, H(mu)={h:.12g}).")
        return []
    warnings = []
    if c - i <= tol:
        warnings.append(f"I(X;Y) and C_q differ by {c - i:.3g}, below tolerance, although some overlap is fractional.")
    if h - c <= tol:
        warnings.append(f"C_q and H(mu) differ by {h - c:.3g}, below tolerance, although some overlap is fractional.")
    return warnings


# --- REPORT ---

@dataclass
class AnalysisReport:
    name: str
    parameters: dict
    base: str
    h_mu: float
    h_mu_label: str
    i_xy: float
    c_q: float
    c_q_diagonal: float
    excess: dict
    e_exact: float
    holevo: dict
    commuting: bool
    gram_class: str
    case_label: str
    merging_pairs: list
    unifilar: bool
    quantum_advantage: bool
    spectrum: list
    warnings: list = field(default_factory=list)
    validation: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name, "parameters": dict(self.parameters), "base": self.base,
            "h_mu": self.h_mu, "h_mu_label": self.h_mu_label, "i_xy": self.i_xy, "c_q": self.c_q,
            "c_q_diagonal": self.c_q_diagonal, "excess": self.excess, "e_exact": self.e_exact,
            "holevo": self.holevo, "commuting": self.commuting, "gram_class": self.gram_class,
            "case_label": self.case_label, "merging_pairs": [list(p) for p in self.merging_pairs],
            "unifilar": self.unifilar, "quantum_advantage": self.quantum_advantage,
            "spectrum": list(self.spectrum), "warnings": list(self.warnings), "validation": self.validation,
        }


def _epsilon_machine_accepted(model, unifilar, assert_epsilon_machine, warnings):
    if assert_epsilon_machine and "not-epsilon-machine" in model.flags:
        warnings.append(f"'{model.name}' is marked as not an epsilon-machine; H(mu) is not C_epsilon.")
    if assert_epsilon_machine and not unifilar:
        warnings.append(f"'{model.name}' is not unifilar, so it cannot be an epsilon-machine; "
                        f"I(X;Y) is only an upper bound on E.")
    return assert_epsilon_machine and unifilar and "not-epsilon-machine" not in model.flags


def classify(model, qm, metrics, excess=None, c_q_diagonal=None, holevo=None,
             assert_epsilon_machine=False, assert_minimal=False, validation=None, warnings=None):
    warnings = list(warnings or [])
    gram_class = classify_gram(qm.gram, qm.weights)
    case_label = _CASE_FOR_GRAM[gram_class]

    stationary = validation is None or not validation.has("non-invariant μ")
    if not stationary:
        warnings.append("Initial distribution is not invariant; E_L <= I(X;Y) is not checked.")
    check_chain(metrics, model.name, excess.last if excess is not None and stationary else None)
    warnings.extend(check_case(case_label, metrics, model.name))

    witnesses = merging_criterion(model)
    full_overlaps = qm.gram[np.triu_indices(model.n, k=1)]
    if (not witnesses) != bool(np.all(full_overlaps <= tolerance("tau_zero"))):
        warnings.append("Merging witnesses and Gram off-diagonals disagree about shared transitions.")

    unifilar = is_unifilar(model)
    epsilon_machine = _epsilon_machine_accepted(model, unifilar, assert_epsilon_machine, warnings)
    h_mu_label = "C_Cl" if assert_minimal else ("C_epsilon" if epsilon_machine else "H(mu)")
    e_exact = metrics.i_xy if epsilon_machine else None
    quantum_advantage = metrics.c_q < metrics.h_mu - _chain_tol()

    if not assert_impossible_cases(metrics):
        raise ConsistencyError(f"'{model.name}' lands in an impossible equality case "
                               f"(I={metrics.i_xy:.12g}, C_q={metrics.c_q:.12g}, H(mu)={metrics.h_mu:.12g}).")
    for message in warnings:
        logging.warning(f"{model.name}: {message}")
    logging.info(f"Classified '{model.name}' as case {case_label} ({gram_class}), "
                 f"{len(witnesses)} merging witness(es).")

    return AnalysisReport(
        name=model.name, parameters=dict(model.parameters), base=qm.base,
        h_mu=metrics.h_mu, h_mu_label=h_mu_label, i_xy=metrics.i_xy, c_q=metrics.c_q,
        c_q_diagonal=c_q_diagonal, excess=excess.to_dict() if excess is not None else {},
        e_exact=e_exact, holevo=holevo.to_dict() if holevo is not None else {},
        commuting=holevo.commuting if holevo is not None else gram_class != GRAM_GENERAL,
        gram_class=gram_class, case_label=case_label,
        merging_pairs=[w.labels(model) for w in witnesses], unifilar=unifilar,
        quantum_advantage=quantum_advantage, spectrum=[float(v) for v in qm.spectrum],
        warnings=warnings, validation=validation.to_dict() if validation is not None else {},
    )


def capped_block_depth(model, block_depth=None):
    depth = block_depth or APP_CONFIG["default_block_depth"]
    cap = max(1, max_length_within_budget(model.m) // 2)
    if depth > cap:
        return cap, (f"Block depth {depth} needs words of length {2 * depth} over {model.m} symbols, "
                     f"above the word budget; using depth {cap}.")
    return depth, None


def analyze_model(model, base=None, block_depth=None, assert_epsilon_machine=False, assert_minimal=False):
    # Full analysis of one HMM: entropy chain, quantum models, excess curve and equality case.
    base = base_tag(base or APP_CONFIG["default_log_base"])
    validation = validate(model)
    if not validation.ok:
        kinds = sorted({v.kind for v in validation.errors})
        raise ModelStructureError(f"Model '{model.name}' fails validation: {', '.join(kinds)}.")

    warnings = [f"{v.kind} at {v.location} ({v.magnitude:.3g})" for v in validation.warnings]
    depth, depth_warning = capped_block_depth(model, block_depth)
    if depth_warning:
        warnings.append(depth_warning)

    qm = induce_quantum_model(model, base)
    metrics = ModelMetrics.from_quantum_model(qm)
    excess = excess_curve(model, depth, base)
    c_q_diagonal = build_diagonal_construction(model, base).c_q_tilde
    holevo = holevo_report(qm)
    return classify(model, qm, metrics, excess, c_q_diagonal, holevo,
                    assert_epsilon_machine, assert_minimal, validation, warnings)
