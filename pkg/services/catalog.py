import logging
import math
from dataclasses import dataclass

import numpy as np

from core_logic.hmm_core import make_hmm
from core_logic.info_metrics import channel_mutual_information, shannon_entropy
from core_logic.quantum_model import induce_quantum_model, make_generic_hqmm
from hqmm_lib.errors import CatalogParameterError
from hqmm_lib.model_io import document_for


# --- ENTRY TYPES ---
@dataclass(frozen=True)
class ParameterSpec:
    name: str
    low: float
    high: float
    default: float
    low_open: bool = False

    def constraint(self):
        low_op = "<" if self.low_open else "<="
        return f"{self.low:g} {low_op} {self.name} <= {self.high:g}"

    def check(self, value):
        too_low = value <= self.low if self.low_open else value < self.low
        if too_low or value > self.high or math.isnan(value):
            raise CatalogParameterError(f"Parameter {self.name}={value!r} is out of range; requires {self.constraint()}.")


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    parameters: tuple
    builder: object
    locus: str
    kind: str = "hmm"
    reference: str = None   # catalog id of a classical model with the same word statistics

    def defaults(self):
        return {spec.name: spec.default for spec in self.parameters}


_EPS = ParameterSpec("eps", 0.0, 1.0, 0.5, low_open=True)
_P = ParameterSpec("p", 0.0, 1.0, 0.5)
_Q = ParameterSpec("q", 0.0, 1.0, 0.7)


# --- BUILDERS ---
def _perturbed_coin_em(eps):
    t0 = [[0.5 * (1 + eps), 0.0], [0.5 * (1 - eps), 0.0]]
    t1 = [[0.0, 0.5 * (1 - eps)], [0.0, 0.5 * (1 + eps)]]
    return make_hmm("perturbed-coin-em", ["0", "1"], ["0", "1"], [t0, t1], initial=[0.5, 0.5],
                    flags={"epsilon-machine"}, parameters={"eps": eps})


def _perturbed_coin_3state(eps):
    t0 = [[eps, 0.0, 1 - eps], [0.0, 0.0, 0.0], [eps / 2, 0.0, (1 - eps) / 2]]
    t1 = [[0.0, 0.0, 0.0], [0.0, eps, 1 - eps], [0.0, eps / 2, (1 - eps) / 2]]
    return make_hmm("perturbed-coin-3state", ["0", "1", "2"], ["0", "1"], [t0, t1],
                    initial=[eps / 2, eps / 2, 1 - eps], flags={"not-epsilon-machine"},
                    parameters={"eps": eps})


def _rnc(p, q):
    t0 = [[0.0, p, 0.0], [1.0, 0.0, 0.0], [q, 0.0, 0.0]]
    t1 = [[0.0, 0.0, 1 - p], [0.0, 0.0, 0.0], [1 - q, 0.0, 0.0]]
    # at q = 1 states B and C coincide, so the model stops being an epsilon-machine
    flags = {"epsilon-machine"} if q < 1 else {"not-epsilon-machine"}
    return make_hmm("rnc", ["A", "B", "C"], ["0", "1"], [t0, t1],
                    initial=[0.5, p / 2, (1 - p) / 2], flags=flags, parameters={"p": p, "q": q})


def _rnc_merged(p):
    t0 = [[0.0, p], [1.0, 0.0]]
    t1 = [[0.0, 1 - p], [0.0, 0.0]]
    return make_hmm("rnc-merged", ["A", "BC"], ["0", "1"], [t0, t1], initial=[0.5, 0.5],
                    flags={"minimal"}, parameters={"p": p})


def _four_symbol():
    t0 = np.zeros((4, 4)); t0[0, 0] = 0.5; t0[2, 0] = 0.25; t0[3, 0] = 0.25
    t1 = np.zeros((4, 4)); t1[1, 1] = 0.5; t1[2, 1] = 0.25; t1[3, 1] = 0.25
    t2 = np.zeros((4, 4)); t2[0, 2] = 0.25; t2[1, 2] = 0.25; t2[2, 2] = 0.5
    t3 = np.zeros((4, 4)); t3[0, 3] = 0.25; t3[1, 3] = 0.25; t3[3, 3] = 0.5
    return make_hmm("four-symbol", ["U", "D", "R", "L"], ["0", "1", "2", "3"], [t0, t1, t2, t3],
                    initial=[0.25] * 4, flags={"epsilon-machine", "minimal"})


def _monras_2level():
    up = np.array([1.0, 0.0])
    down = np.array([0.0, 1.0])
    plus = (up + down) / math.sqrt(2)
    minus = (up - down) / math.sqrt(2)
    kraus = [[np.outer(v, v) / math.sqrt(2)] for v in (up, down, plus, minus)]
    return make_generic_hqmm("monras-2level", ["0", "1", "2", "3"], kraus, np.eye(2) / 2)


CATALOG = {
    entry.id: entry for entry in [
        CatalogEntry("perturbed-coin-em", (_EPS,), _perturbed_coin_em,
                     "perturbed coin, two-state epsilon-machine"),
        CatalogEntry("perturbed-coin-3state", (_EPS,), _perturbed_coin_3state,
                     "perturbed coin, three-state generator with lower state entropy"),
        CatalogEntry("rnc", (_P, _Q), _rnc, "random noisy copy"),
        CatalogEntry("rnc-merged", (_P,), _rnc_merged, "random noisy copy at q=1 with B and C merged"),
        CatalogEntry("four-symbol", (), _four_symbol, "four-symbol process U/D/R/L"),
        CatalogEntry("monras-2level", (), _monras_2level, "two-level HQMM for the four-symbol process",
                     kind="hqmm", reference="four-symbol"),
    ]
}


# --- LOOKUP & EMISSION ---
def get_entry(entry_id):
    try:
        return CATALOG[entry_id]
    except KeyError:
        raise CatalogParameterError(f"Unknown catalog id '{entry_id}'. Known ids: {', '.join(CATALOG)}") from None


def resolve_parameters(entry, params):
    resolved = entry.defaults()
    known = set(resolved)
    for name, value in (params or {}).items():
        if name not in known:
            raise CatalogParameterError(f"Catalog entry '{entry.id}' has no parameter '{name}' "
                                        f"(parameters: {', '.join(sorted(known)) or 'none'}).")
        resolved[name] = float(value)
    for spec in entry.parameters:
        spec.check(resolved[spec.name])
    return resolved


def build(entry_id, params=None):
    entry = get_entry(entry_id)
    resolved = resolve_parameters(entry, params)
    logging.debug(f"Building catalog model '{entry_id}' with {resolved}")
    return entry.builder(**resolved)


def list_entries():
    return list(CATALOG.values())


def perturbed_coin_extras(eps, base="2"):
    """Quantities plotted against eps for the perturbed coin: both generators, both quantum models,
    and the cited lower bound on the generative complexity."""
    markov = build("perturbed-coin-em", {"eps": eps})
    three = build("perturbed-coin-3state", {"eps": eps})
    i_markov = channel_mutual_information(markov, base)
    half = eps / 2
    return {
        "e": i_markov,
        "i_markov": i_markov,
        "c_q_markov": induce_quantum_model(markov, base).c_q,
        "i_3state": channel_mutual_information(three, base),
        "c_q_3state": induce_quantum_model(three, base).c_q,
        "h_p_3state": shannon_entropy(three.initial, base),
        "c_epsilon": shannon_entropy(markov.initial, base),
        "c_cl_lower_bound": shannon_entropy([1 - half, half], base),
    }


def emit(entry_id, params=None):
    # Model-file document (HMM or GenericHqmm format) for a catalog entry.
    return document_for(build(entry_id, params))
