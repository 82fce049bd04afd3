"""Shannon quantities for HMMs: entropies, mutual information, the state/transition
channel I(X;Y) and the excess-entropy curve E_L = 2 H_L - H_2L."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from core_logic.hmm_core import is_unifilar, iter_word_levels
from hqmm_lib.config import tolerance
from hqmm_lib.errors import NonUnifilarError, ProbabilityError


def base_tag(base):
    if isinstance(base, str):
        tag = base.strip().lower()
        if tag in ("2", "e"):
            return tag
        raise ValueError(f"Log base must be '2' or 'e', got {base!r}")
    if base == 2:
        return "2"
    if base == math.e:
        return "e"
    raise ValueError(f"Log base must be 2 or e, got {base!r}")


def _log_denominator(base):
    return math.log(2.0) if base_tag(base) == "2" else 1.0


def _checked_probabilities(dist, tol):
    p = np.asarray(dist, dtype=float).ravel()
    if p.size == 0:
        raise ProbabilityError("Empty probability vector.")
    if np.any(p < -tol):
        raise ProbabilityError(f"Probability vector has a negative entry ({p.min():.3g}).")
    total = math.fsum(p)
    if abs(total - 1.0) > tol:
        raise ProbabilityError(f"Probability vector sums to {total:.12g}, not 1.")
    return np.clip(p, 0.0, None)


def shannon_entropy(dist, base="2", tol=None):
    """-sum p log p with 0 log 0 = 0.

    Terms are added with math.fsum so the result does not depend on the order of
    the entries (transposed joint tables give bit-identical entropies).
    """
    tol = tolerance("tau_stoch") if tol is None else tol
    p = _checked_probabilities(dist, tol)
    p = p[p > 0]
    terms = -p * np.log(p)
    return max(0.0, math.fsum(terms) / _log_denominator(base))


def _fsum_axis(joint, axis):
    moved = np.moveaxis(joint, axis, 0)
    return np.array([math.fsum(moved[:, k]) for k in range(moved.shape[1])])


def mutual_information(joint, base="2", tol=None):
    # H(X) + H(Y) - H(X,Y) for a 2-d joint table, clamped at 0.
    tol = tolerance("tau_stoch") if tol is None else tol
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise ProbabilityError(f"Joint table must be 2-dimensional, got shape {joint.shape}.")
    _checked_probabilities(joint, tol)
    joint = np.clip(joint, 0.0, None)
    h_x = shannon_entropy(_fsum_axis(joint, 1), base, tol)
    h_y = shannon_entropy(_fsum_axis(joint, 0), base, tol)
    h_xy = shannon_entropy(np.sort(joint.ravel()), base, tol)
    value = h_x + h_y - h_xy
    if value < -10 * tol:
        logging.warning(f"Mutual information evaluated to {value:.3g}; clamping to 0.")
    return max(0.0, value)


@dataclass(frozen=True, eq=False)
class ChannelDistribution:
    # Input X = current state (law mu), output Y = (next state j, symbol r).
    input_distribution: np.ndarray
    joint: np.ndarray            # joint[i, r * n + j] = mu_i T[r][i][j]
    output_labels: tuple

    @property
    def output_distribution(self):
        return self.joint.sum(axis=0)


def channel_distribution(model):
    n = model.n
    joint = model.initial[:, np.newaxis] * model.transitions.transpose(1, 0, 2).reshape(n, -1)
    labels = tuple((model.state_labels[j], model.symbol_labels[r])
                   for r in range(model.m) for j in range(n))
    return ChannelDistribution(model.initial.copy(), joint, labels)


def channel_mutual_information(model, base="2"):
    return mutual_information(channel_distribution(model).joint, base)


# --- BLOCK ENTROPIES & EXCESS ENTROPY ---

def block_entropies(model, max_length, base="2", budget=None):
    # [H_1, ..., H_max_length] from exact word distributions.
    entropies = []
    for _, _, probabilities in iter_word_levels(model, max_length, track_words=False, budget=budget):
        total = math.fsum(probabilities)
        entropies.append(shannon_entropy(probabilities / total, base))
    return entropies


@dataclass(frozen=True)
class ExcessCurve:
    points: tuple          # ((L, E_L), ...)
    block_entropies: tuple  # (H_1, ..., H_2Lmax)
    max_length: int
    base: str

    @property
    def last(self):
        return self.points[-1][1] if self.points else 0.0

    @property
    def last_increment(self):
        if len(self.points) < 2:
            return self.last
        return self.points[-1][1] - self.points[-2][1]

    @property
    def entropy_rate_estimate(self):
        # h = H_L - H_{L-1} at the deepest block length available.
        h = self.block_entropies
        if not h:
            return 0.0
        return h[-1] - h[-2] if len(h) > 1 else h[0]

    def is_monotone(self, tol=None):
        tol = 10 * tolerance("tau_stoch") if tol is None else tol
        values = [e for _, e in self.points]
        return all(b >= a - tol for a, b in zip(values, values[1:]))

    def to_dict(self):
        return {"points": [[length, value] for length, value in self.points],
                "max_length": self.max_length, "last": self.last,
                "last_increment": self.last_increment,
                "entropy_rate_estimate": self.entropy_rate_estimate, "base": self.base}


def excess_curve(model, max_length, base="2", budget=None):
    if max_length < 1:
        raise ValueError(f"max_length must be positive, got {max_length}")
    h = block_entropies(model, 2 * max_length, base, budget)
    points = tuple((length, max(0.0, 2 * h[length - 1] - h[2 * length - 1]))
                   for length in range(1, max_length + 1))
    curve = ExcessCurve(points, tuple(h), max_length, base_tag(base))
    if not curve.is_monotone():
        logging.warning(f"Excess-entropy curve of '{model.name}' is not monotone within tolerance: {points}")
    logging.debug(f"Excess curve of '{model.name}': last={curve.last:.12g}, increment={curve.last_increment:.3g}")
    return curve


def excess_entropy_epsilon_machine(model, base="2"):
    """Exact E for an epsilon-machine: E = I(X;Y).

    Only unifilarity can be checked here; causal-state minimality is the caller's assertion.
    """
    if not is_unifilar(model):
        raise NonUnifilarError(
            f"Model '{model.name}' is not unifilar, so it is not an epsilon-machine and I(X;Y) is only an "
            f"upper bound on E (the identity E = I(X;Y) needs causal states).")
    return channel_mutual_information(model, base)
