import logging
from dataclasses import dataclass

import numpy as np

from core_logic.hmm_core import Hmm
from core_logic.info_metrics import base_tag, channel_mutual_information, shannon_entropy
from core_logic.quantum_model import (
    GenericHqmm, hqmm_entropy, induce_quantum_model, make_generic_hqmm, symbol_probabilities,
)
from hqmm_lib.config import tolerance
from hqmm_lib.errors import ConsistencyError
from services.catalog import build as build_catalog_model


# --- DIAGONAL CONSTRUCTION ---
@dataclass(frozen=True, eq=False)
class DiagonalConstruction:
    source: Hmm
    hqmm: GenericHqmm
    c_q_tilde: float
    base: str = "2"


def build_diagonal_construction(model, base="2"):
    # HQMM on C^n with Kraus operators K_r^{i,j} = sqrt(T[r][j][i]) |i><j| and rho = diag(mu).
    n = model.n
    kraus = []
    for r in range(model.m):
        operators = []
        for j in range(n):
            for i in range(n):
                weight = model.transitions[r, j, i]
                if weight > 0.0:
                    k = np.zeros((n, n))
                    k[i, j] = np.sqrt(weight)
                    operators.append(k)
        if not operators:
            # symbol never emitted; a zero operator keeps the per-symbol list non-empty
            operators.append(np.zeros((n, n)))
        kraus.append(operators)

    h = make_generic_hqmm(f"{model.name} (diagonal)", model.symbol_labels, kraus, np.diag(model.initial),
                          parameters=model.parameters, tol=10 * tolerance("tau_stoch"))

    # P(r | S_j) = Tr(K_r rho_j) must reproduce the classical emission law
    emission = model.transitions.sum(axis=2).T
    for j in range(n):
        basis = np.zeros((n, n))
        basis[j, j] = 1.0
        drift = float(np.max(np.abs(symbol_probabilities(h, basis) - emission[j])))
        if drift > tolerance("tau_eig") + tolerance("tau_stoch"):
            raise ConsistencyError(f"Diagonal construction of '{model.name}' changes the emission law of "
                                   f"state {model.state_labels[j]} by {drift:.3g}.")

    c_q_tilde = hqmm_entropy(h, base)
    h_mu = shannon_entropy(model.initial, base)
    if abs(c_q_tilde - h_mu) > 10 * tolerance("tau_stoch"):
        raise ConsistencyError(f"Diagonal construction entropy {c_q_tilde:.12g} differs from H(mu) = {h_mu:.12g}.")
    return DiagonalConstruction(model, h, c_q_tilde, base_tag(base))


# --- COMPARISON ---
@dataclass(frozen=True)
class ConstructionComparison:
    h_mu: float
    i_xy: float
    c_q_induced: float
    c_q_diagonal: float
    monras_applicable: bool
    monras_entropy: float = None
    base: str = "2"

    def to_dict(self):
        return {"h_mu": self.h_mu, "i_xy": self.i_xy, "c_q_induced": self.c_q_induced,
                "c_q_diagonal": self.c_q_diagonal, "monras_applicable": self.monras_applicable,
                "monras_entropy": self.monras_entropy, "base": self.base}


def _matches_four_symbol(model):
    reference = build_catalog_model("four-symbol", {})
    return (model.transitions.shape == reference.transitions.shape
            and np.allclose(model.transitions, reference.transitions, atol=tolerance("tau_stoch"), rtol=0.0))


def compare_constructions(model, base="2"):
    h_mu = shannon_entropy(model.initial, base)
    i_xy = channel_mutual_information(model, base)
    c_q_induced = induce_quantum_model(model, base).c_q
    c_q_diagonal = build_diagonal_construction(model, base).c_q_tilde

    monras_applicable = _matches_four_symbol(model)
    monras_entropy = None
    if monras_applicable:
        monras_entropy = hqmm_entropy(build_catalog_model("monras-2level", {}), base)
        logging.info(f"Two-level model for '{model.name}' has entropy {monras_entropy:.12g} "
                     f"against induced C_q {c_q_induced:.12g}.")
    return ConstructionComparison(h_mu, i_xy, c_q_induced, c_q_diagonal, monras_applicable,
                                  monras_entropy, base_tag(base))
