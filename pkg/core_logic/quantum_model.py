"""Induced quantum model of a classical HMM and generic HQMM machinery.

The induced model codes state i as |S_i> = sum_{r,j} sqrt(T[r][i][j]) |j>(x)|r>;
C_q is the von Neumann entropy of rho = sum_i p_i |S_i><S_i|.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from core_logic.hmm_core import Hmm, SampleResult, WordDistribution, check_budget
from core_logic.info_metrics import base_tag, channel_mutual_information, shannon_entropy
from core_logic.linalg import hermitian_eigvalsh, jacobi_eigh
from hqmm_lib.config import tolerance
from hqmm_lib.errors import ConsistencyError, HqmmStructureError, SpectrumError


@dataclass(frozen=True, eq=False)
class QuantumModel:
    source: Hmm
    state_vectors: np.ndarray   # (n, n*m); coordinate j*m + r holds sqrt(T[r][i][j])
    weights: np.ndarray
    gram: np.ndarray
    spectrum: np.ndarray
    c_q: float
    base: str = "2"

    @property
    def dimension(self):
        return self.state_vectors.shape[1]


def state_vectors(model):
    n = model.n
    amplitudes = np.sqrt(np.clip(model.transitions, 0.0, None))
    return amplitudes.transpose(1, 2, 0).reshape(n, n * model.m)


def weighted_gram(gram, weights):
    root = np.sqrt(np.clip(weights, 0.0, None))
    return root[:, np.newaxis] * gram * root[np.newaxis, :]


def clamp_spectrum(eigenvalues, tau_eig=None):
    tau_eig = tolerance("tau_eig") if tau_eig is None else tau_eig
    values = np.asarray(eigenvalues, dtype=float)
    if values.size and values.min() < -tau_eig:
        raise SpectrumError(f"Density matrix has eigenvalue {values.min():.3g} below -{tau_eig:g}; "
                            f"the input is not a valid quantum state.")
    return np.sort(np.clip(values, 0.0, None))[::-1]


def _spectrum_from_gram(gram, weights):
    # Nonzero spectrum of rho equals the spectrum of W[i][k] = sqrt(p_i p_k) <S_i|S_k>.
    eigenvalues, _ = jacobi_eigh(weighted_gram(gram, weights))
    return clamp_spectrum(eigenvalues)


def von_neumann_entropy(spectrum, base="2"):
    values = clamp_spectrum(spectrum)
    tol = max(tolerance("tau_stoch"), len(values) * tolerance("tau_eig"))
    return shannon_entropy(values, base, tol)


def induce_quantum_model(model, base="2"):
    vectors = state_vectors(model)
    reconstructed = (vectors ** 2).reshape(model.n, model.n, model.m).transpose(2, 0, 1)
    drift = float(np.max(np.abs(reconstructed - np.clip(model.transitions, 0.0, None))))
    if drift > tolerance("tau_eig"):
        raise ConsistencyError(f"Squared amplitudes of '{model.name}' differ from T by {drift:.3g}.")

    gram = np.clip(vectors @ vectors.T, 0.0, 1.0)
    norms = np.diag(gram)
    if np.any(np.abs(norms - 1.0) > tolerance("tau_stoch")):
        logging.warning(f"Quantum states of '{model.name}' are not unit vectors (norms {norms}); "
                        f"the classical rows are not stochastic.")

    spectrum = _spectrum_from_gram(gram, model.initial)
    c_q = von_neumann_entropy(spectrum, base)
    logging.info(f"Induced quantum model of '{model.name}': C_q = {c_q:.12g} (base {base_tag(base)})")
    return QuantumModel(model, vectors, model.initial.copy(), gram, spectrum, c_q, base_tag(base))


def density_spectrum(qm):
    # Eigenvalues of rho, descending, computed on the n x n weighted Gram matrix.
    return _spectrum_from_gram(qm.gram, qm.weights)


def full_density_matrix(qm):
    vectors = qm.state_vectors
    return (vectors.T * qm.weights) @ vectors


def full_density_spectrum(qm):
    # Eigenvalues of the full (n*m)-dimensional rho; independent oracle using numpy.
    return np.sort(np.linalg.eigvalsh(full_density_matrix(qm)))[::-1]


# --- HOLEVO BOUND ---

def support_mask(weights):
    return np.asarray(weights) > tolerance("tau_stoch")


def off_diagonal_overlaps(gram, weights):
    # Overlaps <S_i|S_k>, i < k, between states that carry weight.
    idx = np.nonzero(support_mask(weights))[0]
    return np.array([gram[i, k] for a, i in enumerate(idx) for k in idx[a + 1:]])


def overlaps_zero_or_one(gram, weights):
    tau_zero = tolerance("tau_zero")
    overlaps = off_diagonal_overlaps(gram, weights)
    return bool(np.all((overlaps <= tau_zero) | (overlaps >= 1.0 - tau_zero)))


def states_commute(qm, tol=None):
    # Commutator check ||rho_i rho_k - rho_k rho_i||_max <= tol for every weighted pair.
    tol = tolerance("tau_zero") if tol is None else tol
    idx = np.nonzero(support_mask(qm.weights))[0]
    for a, i in enumerate(idx):
        rho_i = np.outer(qm.state_vectors[i], qm.state_vectors[i])
        for k in idx[a + 1:]:
            rho_k = np.outer(qm.state_vectors[k], qm.state_vectors[k])
            if np.max(np.abs(rho_i @ rho_k - rho_k @ rho_i)) > tol:
                return False
    return True


@dataclass(frozen=True)
class HolevoReport:
    lhs: float        # I(X;Y)
    rhs: float        # C_q (pure code states, so the sum of S(rho_i) vanishes)
    gap: float
    commuting: bool
    base: str = "2"

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "gap": self.gap,
                "commuting": self.commuting, "base": self.base}


def holevo_report(qm):
    lhs = channel_mutual_information(qm.source, qm.base)
    gap = qm.c_q - lhs
    commuting = overlaps_zero_or_one(qm.gram, qm.weights)
    tol = 10 * tolerance("tau_stoch")
    if gap < -tol:
        logging.error(f"Holevo bound violated for '{qm.source.name}': I={lhs:.12g} > C_q={qm.c_q:.12g}")
    if commuting != (gap <= tol):
        logging.warning(f"Holevo equality and commutation disagree for '{qm.source.name}' "
                        f"(gap {gap:.3g}, commuting={commuting}).")
    return HolevoReport(lhs, qm.c_q, gap, commuting, qm.base)


def holevo_quantity(density_matrices, weights, base="2"):
    # chi = S(sum p_i rho_i) - sum p_i S(rho_i) for an arbitrary ensemble.
    weights = np.asarray(weights, dtype=float)
    mixture = sum(p * np.asarray(rho) for p, rho in zip(weights, density_matrices))
    chi = von_neumann_entropy(hermitian_eigvalsh(mixture), base)
    for p, rho in zip(weights, density_matrices):
        if p > 0:
            chi -= p * von_neumann_entropy(hermitian_eigvalsh(rho), base)
    return chi


# --- GENERIC HQMM ---

@dataclass(frozen=True, eq=False)
class GenericHqmm:
    # Density matrix rho plus, per symbol, a list of Kraus operators.
    dimension: int
    symbol_labels: tuple
    kraus: tuple          # kraus[r] = tuple of (d, d) complex arrays
    rho: np.ndarray
    name: str = "hqmm"
    parameters: dict = field(default_factory=dict)

    @property
    def m(self):
        return len(self.symbol_labels)


def validate_hqmm(h, tol=None):
    tol = tolerance("tau_eig") if tol is None else tol
    d = h.dimension
    if len(h.kraus) != len(h.symbol_labels) or not h.symbol_labels:
        raise HqmmStructureError(f"HQMM '{h.name}' needs one Kraus list per symbol "
                                 f"({len(h.symbol_labels)} symbols, {len(h.kraus)} lists).")
    completeness = np.zeros((d, d), dtype=complex)
    for r, operators in enumerate(h.kraus):
        if not operators:
            raise HqmmStructureError(f"HQMM '{h.name}': symbol {h.symbol_labels[r]} has no Kraus operator.")
        for k in operators:
            if k.shape != (d, d):
                raise HqmmStructureError(f"HQMM '{h.name}': Kraus operator of shape {k.shape}, expected ({d}, {d}).")
            completeness += k.conj().T @ k
    defect = float(np.max(np.abs(completeness - np.eye(d))))
    if defect > tol:
        raise HqmmStructureError(f"HQMM '{h.name}' is not trace preserving: "
                                 f"max |sum K^dagger K - I| = {defect:.3g}.")
    rho = h.rho
    if rho.shape != (d, d):
        raise HqmmStructureError(f"HQMM '{h.name}': rho has shape {rho.shape}, expected ({d}, {d}).")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise HqmmStructureError(f"HQMM '{h.name}': rho is not Hermitian.")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise HqmmStructureError(f"HQMM '{h.name}': trace of rho is {np.trace(rho).real:.12g}, not 1.")
    if hermitian_eigvalsh(rho).min() < -tol:
        raise HqmmStructureError(f"HQMM '{h.name}': rho is not positive semidefinite.")
    return h


def make_generic_hqmm(name, symbols, kraus, rho, parameters=None, tol=None):
    operators = tuple(tuple(np.array(k, dtype=complex) for k in per_symbol) for per_symbol in kraus)
    rho = np.array(rho, dtype=complex)
    h = GenericHqmm(rho.shape[0], tuple(str(s) for s in symbols), operators, rho, name, parameters or {})
    return validate_hqmm(h, tol)


def apply_operation(kraus_list, rho):
    return sum(k @ rho @ k.conj().T for k in kraus_list)


def symbol_probabilities(h, rho=None):
    rho = h.rho if rho is None else rho
    return np.array([np.trace(apply_operation(ops, rho)).real for ops in h.kraus])


def hqmm_step(h, rng):
    # Emits one symbol r with probability Tr(K_r rho) and returns (r, updated HQMM).
    updated = [apply_operation(ops, h.rho) for ops in h.kraus]
    probabilities = np.clip(np.array([np.trace(u).real for u in updated]), 0.0, None)
    total = probabilities.sum()
    if total <= 0:
        raise ConsistencyError(f"HQMM '{h.name}' assigns zero probability to every symbol.")
    r = int(np.searchsorted(np.cumsum(probabilities) / total, rng.random(), side="right"))
    r = min(r, h.m - 1)
    # rounding in the cumulative sum can land past the last emittable symbol
    while probabilities[r] == 0.0:
        r -= 1
    rho = updated[r] / probabilities[r]
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return r, replace(h, rho=rho)


def simulate_generic_hqmm(h, steps, seed):
    rng = np.random.default_rng(seed)
    symbols = np.empty(steps, dtype=np.int64)
    for t in range(steps):
        symbols[t], h = hqmm_step(h, rng)
    return SampleResult(symbols, np.empty(0, dtype=np.int64), h.symbol_labels, ())


def hqmm_word_distribution(h, length, base="2", budget=None):
    # Exact P(w) = Tr(K_{wL} ... K_{w1}(rho)) by pruned level-wise expansion.
    check_budget(h.m, length, budget)
    states = [h.rho]
    words = [()]
    for _ in range(length):
        next_states, next_words = [], []
        for word, rho in zip(words, states):
            for r, ops in enumerate(h.kraus):
                branch = apply_operation(ops, rho)
                if np.trace(branch).real > 0.0:
                    next_states.append(branch)
                    next_words.append(word + (r,))
        states, words = next_states, next_words
    probabilities = np.array([np.trace(rho).real for rho in states])
    return WordDistribution(length, np.array(words, dtype=np.int64).reshape(len(words), length),
                            probabilities, h.symbol_labels, base_tag(base))


def hqmm_entropy(h, base="2"):
    return von_neumann_entropy(hermitian_eigvalsh(h.rho), base)


def induced_hqmm(qm):
    # The induced model as one HQMM: Kraus set {|S_j><j,r|} for symbol r (measure, then re-prepare).
    n, m = qm.source.n, qm.source.m
    d = n * m
    kraus = []
    for r in range(m):
        operators = []
        for j in range(n):
            basis = np.zeros(d)
            basis[j * m + r] = 1.0
            operators.append(np.outer(qm.state_vectors[j], basis))
        kraus.append(operators)
    return make_generic_hqmm(f"{qm.source.name} (induced HQMM)", qm.source.symbol_labels, kraus,
                             full_density_matrix(qm), tol=10 * tolerance("tau_stoch"))


def simulate_hqmm(qm, steps, seed, initial_state=None):
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    rng = np.random.default_rng(seed)
    n, m = qm.source.n, qm.source.m
    if initial_state is None:
        state = int(rng.choice(n, p=qm.weights / qm.weights.sum()))
    else:
        state = initial_state if isinstance(initial_state, int) else qm.source.state_labels.index(initial_state)
    # K_{r,j} = |S_j><j,r|: project onto outcome (j, r), then re-prepare |S_j>
    induced = induced_hqmm(qm)
    rho = np.outer(qm.state_vectors[state], qm.state_vectors[state]).astype(complex)

    uniforms = rng.random(steps)
    symbols = np.empty(steps, dtype=np.int64)
    states = np.empty(steps, dtype=np.int64)
    for t in range(steps):
        states[t] = state
        # P(j, r) = Tr(K_{r,j} rho K_{r,j}^dag) = <j,r|rho|j,r>
        outcome_probabilities = np.clip(rho.diagonal().real, 0.0, None)
        cumulative = np.cumsum(outcome_probabilities)
        if cumulative[-1] <= 0.0:
            raise ConsistencyError(f"All measurement outcomes of '{qm.source.name}' have zero probability; "
                                   f"the density matrix is corrupt.")
        outcome = int(np.searchsorted(cumulative, uniforms[t] * cumulative[-1], side="right"))
        outcome = min(outcome, len(cumulative) - 1)
        while outcome_probabilities[outcome] == 0.0:
            outcome -= 1
        state, symbols[t] = divmod(outcome, m)
        kraus = induced.kraus[symbols[t]][state]
        rho = kraus @ rho @ kraus.conj().T / outcome_probabilities[outcome]
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
    logging.debug(f"Simulated {steps} HQMM step(s) of '{qm.source.name}' with seed {seed}.")
    return SampleResult(symbols, states, qm.source.symbol_labels, qm.source.state_labels)
