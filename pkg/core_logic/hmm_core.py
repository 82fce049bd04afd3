import bisect
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from hqmm_lib.config import APP_CONFIG, tolerance
from hqmm_lib.errors import (
    BudgetExceededError, ConsistencyError, ModelStructureError, StationaryDistributionError,
)
from hqmm_lib.param_tools import format_symbol_stream, join_state_labels


def _readonly(values):
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Hmm:
    """Finite transition-emitting HMM.

    transitions[r, i, j] is the probability of moving from state i to state j
    while emitting symbol r (row = from-state, column = to-state).
    """
    name: str
    state_labels: tuple
    symbol_labels: tuple
    transitions: np.ndarray
    initial: np.ndarray
    stationary: bool = False
    flags: frozenset = frozenset()
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "state_labels", tuple(str(s) for s in self.state_labels))
        object.__setattr__(self, "symbol_labels", tuple(str(s) for s in self.symbol_labels))
        object.__setattr__(self, "flags", frozenset(self.flags))
        object.__setattr__(self, "parameters", dict(self.parameters))
        try:
            transitions = _readonly(self.transitions)
            initial = _readonly(self.initial)
        except (TypeError, ValueError) as e:
            raise ModelStructureError(f"Model '{self.name}': matrices are not numeric arrays ({e})") from e
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "initial", initial)
        _check_structure(self)

    @property
    def n(self):
        return len(self.state_labels)

    @property
    def m(self):
        return len(self.symbol_labels)

    @property
    def stochastic_matrix(self):
        return self.transitions.sum(axis=0)

    def with_initial(self, initial, stationary=False):
        return replace(self, initial=initial, stationary=stationary)


def _check_structure(model):
    n, m = len(model.state_labels), len(model.symbol_labels)
    if n < 1 or m < 1:
        raise ModelStructureError(f"Model '{model.name}' needs at least one state and one symbol (got n={n}, m={m}).")
    if len(set(model.state_labels)) != n or len(set(model.symbol_labels)) != m:
        raise ModelStructureError(f"Model '{model.name}' has duplicate state or symbol labels.")
    if model.transitions.shape != (m, n, n):
        raise ModelStructureError(
            f"Model '{model.name}': transitions have shape {model.transitions.shape}, expected ({m}, {n}, {n}) "
            f"for {m} symbol(s) and {n} state(s).")
    if model.initial.shape != (n,):
        raise ModelStructureError(
            f"Model '{model.name}': initial distribution has shape {model.initial.shape}, expected ({n},).")
    if not (np.all(np.isfinite(model.transitions)) and np.all(np.isfinite(model.initial))):
        raise ModelStructureError(f"Model '{model.name}' contains non-finite numbers.")


def make_hmm(name, states, symbols, transitions, initial=None, flags=(), parameters=None):
    # Builds an Hmm; a missing initial distribution is replaced by the stationary one.
    transitions = np.asarray(transitions, dtype=float)
    n = len(states)
    if initial is None:
        draft = Hmm(name, states, symbols, transitions, np.full(n, 1.0 / max(n, 1)),
                    flags=flags, parameters=parameters or {})
        return draft.with_initial(stationary_distribution(draft), stationary=True)
    return Hmm(name, states, symbols, transitions, initial, flags=flags, parameters=parameters or {})


# --- VALIDATION ---

@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    magnitude: float
    severity: str = "error"

    def to_dict(self):
        return {"kind": self.kind, "location": self.location,
                "magnitude": self.magnitude, "severity": self.severity}


@dataclass(frozen=True)
class ValidationReport:
    model_name: str
    tolerance: float
    violations: tuple = ()

    @property
    def ok(self):
        return not self.errors

    @property
    def errors(self):
        return tuple(v for v in self.violations if v.severity == "error")

    @property
    def warnings(self):
        return tuple(v for v in self.violations if v.severity == "warning")

    def has(self, kind):
        return any(v.kind == kind for v in self.violations)

    def to_dict(self):
        return {"model": self.model_name, "tolerance": self.tolerance, "ok": self.ok,
                "violations": [v.to_dict() for v in self.violations]}


def validate(model, tol=None):
    tol = tolerance("tau_stoch") if tol is None else tol
    _check_structure(model)
    violations = []

    T = model.transitions
    for r, i, j in zip(*np.nonzero((T < -tol) | (T > 1 + tol))):
        value = T[r, i, j]
        violations.append(Violation(
            "entry out of range",
            f"T[{model.symbol_labels[r]}][{model.state_labels[i]}][{model.state_labels[j]}]",
            float(-value if value < 0 else value - 1)))

    row_sums = T.sum(axis=(0, 2))
    for i, row_sum in enumerate(row_sums):
        if abs(row_sum - 1.0) > tol:
            violations.append(Violation("substochastic row", f"state {model.state_labels[i]} (row sum {row_sum:.12g})",
                                        float(abs(row_sum - 1.0))))

    mu = model.initial
    if np.any(mu < -tol) or abs(mu.sum() - 1.0) > tol:
        magnitude = max(float(-mu.min()), float(abs(mu.sum() - 1.0)))
        violations.append(Violation("invalid initial distribution", "initial", magnitude))
    else:
        residual = float(np.max(np.abs(mu @ model.stochastic_matrix - mu)))
        if residual > tol:
            # Non-invariant initial distributions are accepted (printed models sometimes
            # state one directly) but always flagged.
            violations.append(Violation("non-invariant μ", "initial", residual, severity="warning"))

    report = ValidationReport(model.name, tol, tuple(violations))
    if violations:
        logging.info(f"Validation of '{model.name}': {len(report.errors)} error(s), {len(report.warnings)} warning(s).")
    return report


# --- STATIONARITY ---

def stationary_distribution(model, max_iterations=None):
    """Left fixed point of A = sum_r T[r] by power iteration.

    Iterates the lazy chain (A + I)/2, which has the same fixed points as A but
    no periodicity, from the uniform vector and from every basis vector; all
    limits must agree or the chain has no unique stationary distribution.
    """
    tau_eig = tolerance("tau_eig")
    agree_tol = tolerance("stationary_uniqueness_tol")
    max_iterations = max_iterations or APP_CONFIG["stationary_max_iterations"]

    row_sums = model.transitions.sum(axis=(0, 2))
    bad = np.nonzero(np.abs(row_sums - 1.0) > tolerance("tau_stoch"))[0]
    if bad.size:
        raise StationaryDistributionError(
            f"Model '{model.name}' is not row-stochastic (state {model.state_labels[bad[0]]} sums to "
            f"{row_sums[bad[0]]:.12g}); supply the initial distribution explicitly.")

    n = model.n
    lazy = 0.5 * (model.stochastic_matrix + np.eye(n))
    iterates = np.vstack([np.full(n, 1.0 / n), np.eye(n)])
    for iteration in range(1, max_iterations + 1):
        advanced = iterates @ lazy
        advanced /= advanced.sum(axis=1, keepdims=True)
        change = float(np.max(np.abs(advanced - iterates)))
        iterates = advanced
        if change <= tau_eig / 4:
            break
    else:
        raise StationaryDistributionError(
            f"Power iteration for '{model.name}' did not converge within {max_iterations} iterations; "
            f"supply the initial distribution explicitly.")

    spread = float(np.max(np.abs(iterates - iterates[0])))
    if spread > agree_tol:
        raise StationaryDistributionError(
            f"Model '{model.name}' has no unique stationary distribution (limits from different starting "
            f"points differ by {spread:.3g}); the chain is reducible. Supply the initial distribution explicitly.")

    mu = np.clip(iterates[0], 0.0, None)
    mu /= mu.sum()
    residual = float(np.max(np.abs(mu @ model.stochastic_matrix - mu)))
    logging.debug(f"Stationary distribution of '{model.name}' after {iteration} iterations, residual {residual:.3g}")
    return mu


# --- WORD DISTRIBUTIONS ---

@dataclass(frozen=True, eq=False)
class WordDistribution:
    length: int
    words: np.ndarray
    probabilities: np.ndarray
    symbol_labels: tuple
    base: str = "2"

    def as_dict(self):
        return {format_symbol_stream(self.symbol_labels, word): float(p)
                for word, p in zip(self.words, self.probabilities)}

    def codes(self):
        m = len(self.symbol_labels)
        weights = m ** np.arange(self.length - 1, -1, -1, dtype=np.int64)
        return self.words @ weights

    def dense(self):
        # Probability vector over all m**L words in lexicographic order.
        table = np.zeros(len(self.symbol_labels) ** self.length)
        table[self.codes()] = self.probabilities
        return table

    def probability(self, word):
        if isinstance(word, str):
            word = _parse_word(word, self.symbol_labels)
        matches = np.all(self.words == np.asarray(word, dtype=np.int64), axis=1)
        return float(self.probabilities[matches].sum())

    def total(self):
        return float(np.sum(self.probabilities))


def _parse_word(word, symbol_labels):
    index = {label: k for k, label in enumerate(symbol_labels)}
    parts = word.split(",") if "," in word else list(word)
    return [index[p] for p in parts]


def check_budget(m, length, budget=None):
    budget = budget or APP_CONFIG["word_budget"]
    if m ** length > budget:
        raise BudgetExceededError(
            f"Enumerating words of length L={length} over {m} symbol(s) needs {m ** length} entries, "
            f"above the cap of {budget} (word_budget).")


def max_length_within_budget(m, budget=None):
    budget = budget or APP_CONFIG["word_budget"]
    if m == 1:
        return 10 ** 6
    length = 0
    while m ** (length + 1) <= budget:
        length += 1
    return length


def iter_word_levels(model, max_length, track_words=True, budget=None):
    """Level-wise pruned expansion of mu . T[w1] ... T[wL].

    Yields (length, words, probabilities) for length = 1..max_length. Words with
    zero probability are dropped as soon as they appear, so sparse supports stay cheap.
    """
    check_budget(model.m, max_length, budget)
    m = model.m
    vectors = model.initial[np.newaxis, :].copy()
    words = np.zeros((1, 0), dtype=np.int64) if track_words else None
    for length in range(1, max_length + 1):
        branched = np.einsum("kn,rnj->krj", vectors, model.transitions).reshape(-1, model.n)
        probabilities = branched.sum(axis=1)
        keep = probabilities > 0.0
        vectors = branched[keep]
        probabilities = probabilities[keep]
        if track_words:
            extended = np.hstack([np.repeat(words, m, axis=0),
                                  np.tile(np.arange(m, dtype=np.int64), len(words))[:, np.newaxis]])
            words = extended[keep]
        yield length, words, probabilities


def word_distribution(model, length, base="2", budget=None):
    if length < 1:
        raise ValueError(f"Word length must be positive, got {length}.")
    for level, words, probabilities in iter_word_levels(model, length, budget=budget):
        if level == length:
            return WordDistribution(length, words, probabilities, model.symbol_labels, str(base))


# --- SAMPLING ---

@dataclass(frozen=True, eq=False)
class SampleResult:
    symbols: np.ndarray
    states: np.ndarray
    symbol_labels: tuple
    state_labels: tuple

    def as_text(self):
        return format_symbol_stream(self.symbol_labels, self.symbols)


# Per-row cumulative tables for bisect. The last positive entry is pushed to inf,
# so rounding in the row sum never selects a zero-probability outcome.
def _cumulative_tables(joint_rows):
    tables = []
    for row in joint_rows:
        total = row.sum()
        cumulative = np.cumsum(row) / total
        positive = np.nonzero(row > 0)[0]
        cumulative[positive[-1]:] = np.inf
        tables.append(cumulative.tolist())
    return tables


def sample(model, steps, seed, initial_state=None):
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    rng = np.random.default_rng(seed)
    n = model.n
    if initial_state is None:
        state = int(rng.choice(n, p=model.initial / model.initial.sum()))
    else:
        state = initial_state if isinstance(initial_state, int) else model.state_labels.index(initial_state)

    # outcome index = r * n + j
    joint_rows = [model.transitions[:, i, :].ravel() for i in range(n)]
    tables = _cumulative_tables(joint_rows)
    uniforms = rng.random(steps).tolist()
    symbols = np.empty(steps, dtype=np.int64)
    states = np.empty(steps, dtype=np.int64)
    for t, u in enumerate(uniforms):
        states[t] = state
        outcome = bisect.bisect_right(tables[state], u)
        symbols[t], state = divmod(outcome, n)
    logging.debug(f"Sampled {steps} step(s) from '{model.name}' with seed {seed}.")
    return SampleResult(symbols, states, model.symbol_labels, model.state_labels)


def empirical_block_distribution(symbols, length, m):
    # Relative frequencies of overlapping length-L blocks, indexed like WordDistribution.dense().
    symbols = np.asarray(symbols, dtype=np.int64)
    count = len(symbols) - length + 1
    if count <= 0:
        return np.zeros(m ** length)
    codes = np.zeros(count, dtype=np.int64)
    for k in range(length):
        codes = codes * m + symbols[k:k + count]
    return np.bincount(codes, minlength=m ** length) / count


def total_variation(p, q):
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


# --- STATE MERGING ---

def _identical_row_groups(model, tol):
    rows = model.transitions.transpose(1, 0, 2).reshape(model.n, -1)
    assigned = [None] * model.n
    groups = []
    for i in range(model.n):
        if assigned[i] is not None:
            continue
        group = [i]
        assigned[i] = len(groups)
        for k in range(i + 1, model.n):
            if assigned[k] is None and np.max(np.abs(rows[i] - rows[k])) <= tol:
                group.append(k)
                assigned[k] = len(groups)
        groups.append(group)
    return groups, assigned


def _lump(model, groups, assigned):
    g = len(groups)
    transitions = np.zeros((model.m, g, g))
    for target_group, members in enumerate(groups):
        column_mass = model.transitions[:, :, members].sum(axis=2)
        for source_group, source_members in enumerate(groups):
            transitions[:, source_group, target_group] = column_mass[:, source_members[0]]
    initial = np.array([model.initial[members].sum() for members in groups])
    labels = [join_state_labels([model.state_labels[i] for i in members]) for members in groups]
    return Hmm(model.name, labels, model.symbol_labels, transitions, initial,
               stationary=model.stationary, flags=model.flags - {"epsilon-machine"},
               parameters=model.parameters)


def merge_identical_states(model, tol=None, check_length=3):
    # Merges states whose outgoing rows coincide for every symbol, until none remain.
    tol = tolerance("tau_zero") if tol is None else tol
    current = model
    while True:
        groups, assigned = _identical_row_groups(current, tol)
        if len(groups) == current.n:
            break
        logging.info(f"Merging identical states of '{current.name}': "
                     f"{[[current.state_labels[i] for i in grp] for grp in groups if len(grp) > 1]}")
        current = _lump(current, groups, assigned)

    if current is not model:
        length = min(check_length, max_length_within_budget(model.m))
        before = word_distribution(model, length).dense()
        after = word_distribution(current, length).dense()
        gap = float(np.max(np.abs(before - after)))
        if gap > 10 * tolerance("tau_stoch"):
            raise ConsistencyError(f"Merging states of '{model.name}' changed the length-{length} word "
                                   f"distribution by {gap:.3g}.")
    return current


def is_unifilar(model, tol=None):
    tol = tolerance("tau_zero") if tol is None else tol
    successors = (model.transitions > tol).sum(axis=2)
    return bool(np.all(successors <= 1))
