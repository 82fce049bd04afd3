import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import core_logic.quantum_model as quantum_model
from core_logic.hmm_core import word_distribution
from core_logic.info_metrics import shannon_entropy
from core_logic.quantum_model import (
    clamp_spectrum, density_spectrum, full_density_spectrum, holevo_quantity, holevo_report, hqmm_entropy,
    hqmm_step, hqmm_word_distribution, induce_quantum_model, induced_hqmm, make_generic_hqmm, off_diagonal_overlaps,
    simulate_generic_hqmm, simulate_hqmm, states_commute, symbol_probabilities, von_neumann_entropy,
)
from hqmm_lib.errors import HqmmStructureError, SpectrumError
from services.catalog import build


def rnc_spectrum(p, q):
    root = math.sqrt(1 - 4 * p + 4 * p * p + 4 * p * q - 4 * p * p * q)
    return [0.5, 0.25 * (1 + root), 0.25 * (1 - root)]


# ############################################################################
# INDUCED QUANTUM MODEL
# ############################################################################

@pytest.mark.parametrize("p, q", [(0.5, 0.5), (0.3, 0.8), (0.9, 0.2)])
def test_rnc_spectrum(p, q):
    qm = induce_quantum_model(build("rnc", {"p": p, "q": q}))
    assert_allclose(np.sort(qm.spectrum), np.sort(rnc_spectrum(p, q)), atol=1e-10)
    assert qm.c_q == pytest.approx(shannon_entropy(rnc_spectrum(p, q)), abs=1e-9)


def test_rnc_reference_spectrum():
    qm = induce_quantum_model(build("rnc", {"p": 0.5, "q": 0.5}))
    assert_allclose(qm.spectrum, [0.5, 0.426777, 0.073223], atol=1e-6)
    assert qm.dimension == 6


def test_four_symbol_quantum_model():
    qm = induce_quantum_model(build("four-symbol"))
    assert qm.c_q == pytest.approx(1.2018, abs=5e-4)
    half, root = 0.5, math.sqrt(0.5)
    # U, D, R, L
    expected = np.array([[1, half, root, root],
                         [half, 1, root, root],
                         [root, root, 1, half],
                         [root, root, half, 1]])
    assert_allclose(qm.gram, expected, atol=1e-12)


@pytest.mark.parametrize("eps", [0.1, 0.6])
def test_coin_overlap(eps):
    qm = induce_quantum_model(build("perturbed-coin-em", {"eps": eps}))
    assert qm.gram[0, 1] == pytest.approx(math.sqrt(1 - eps * eps), abs=1e-12)
    assert_allclose(off_diagonal_overlaps(qm.gram, qm.weights), [qm.gram[0, 1]])


def test_natural_log_base():
    bits = induce_quantum_model(build("rnc"), "2").c_q
    nats = induce_quantum_model(build("rnc"), "e").c_q
    assert nats == pytest.approx(bits * math.log(2), abs=1e-12)


def test_gram_and_full_spectrum_agree():
    qm = induce_quantum_model(build("rnc", {"p": 0.4, "q": 0.3}))
    full = full_density_spectrum(qm)
    assert_allclose(full[:3], density_spectrum(qm), atol=1e-9)
    assert_allclose(full[3:], 0.0, atol=1e-9)


def test_clamp_spectrum():
    assert_allclose(clamp_spectrum([0.2, -1e-14, 0.8]), [0.8, 0.2, 0.0])
    with pytest.raises(SpectrumError):
        clamp_spectrum([1.0, -1e-6])
    assert von_neumann_entropy([0.5, 0.5]) == pytest.approx(1.0)


# ############################################################################
# HOLEVO BOUND
# ############################################################################

def test_holevo_equality_for_orthogonal_states():
    qm = induce_quantum_model(build("rnc", {"p": 0.5, "q": 0.0}))
    report = holevo_report(qm)
    assert report.commuting
    assert abs(report.gap) <= 1e-8
    assert states_commute(qm)


def test_holevo_gap_for_overlapping_states():
    qm = induce_quantum_model(build("rnc", {"p": 0.5, "q": 0.7}))
    report = holevo_report(qm)
    assert not report.commuting
    assert report.gap > 1e-3
    assert not states_commute(qm)
    assert report.to_dict()["rhs"] == qm.c_q


def test_holevo_quantity_of_mixed_ensemble():
    plus = np.full((2, 2), 0.5)
    zero = np.diag([1.0, 0.0])
    assert holevo_quantity([zero, np.diag([0.0, 1.0])], [0.5, 0.5]) == pytest.approx(1.0)
    assert holevo_quantity([np.eye(2) / 2, np.eye(2) / 2], [0.3, 0.7]) == pytest.approx(0.0, abs=1e-12)
    chi = holevo_quantity([zero, plus], [0.5, 0.5])
    assert 0.0 < chi < 1.0


# ############################################################################
# GENERIC HQMM
# ############################################################################

def test_monras_model_statistics():
    h = build("monras-2level")
    assert_allclose(symbol_probabilities(h), [0.25] * 4, atol=1e-12)
    assert hqmm_entropy(h) == pytest.approx(1.0)
    assert hqmm_word_distribution(h, 3).total() == pytest.approx(1.0, abs=1e-12)


def test_monras_matches_four_symbol_words():
    h = build("monras-2level")
    classical = build("four-symbol")
    for length in range(1, 5):
        assert_allclose(hqmm_word_distribution(h, length).dense(),
                        word_distribution(classical, length).dense(), atol=1e-9)


def test_invalid_hqmms_are_rejected():
    with pytest.raises(HqmmStructureError, match="trace preserving"):
        make_generic_hqmm("leaky", ["0"], [[np.eye(2) * 0.5]], np.eye(2) / 2)
    with pytest.raises(HqmmStructureError):
        make_generic_hqmm("bad-rho", ["0"], [[np.eye(2)]], np.diag([0.7, 0.7]))
    with pytest.raises(HqmmStructureError):
        make_generic_hqmm("negative", ["0"], [[np.eye(2)]], np.diag([1.5, -0.5]))


def test_induced_hqmm_reproduces_classical_words():
    model = build("rnc", {"p": 0.4, "q": 0.6})
    h = induced_hqmm(induce_quantum_model(model))
    assert h.dimension == 6
    for length in range(1, 5):
        assert_allclose(hqmm_word_distribution(h, length).dense(),
                        word_distribution(model, length).dense(), atol=1e-9)


# ############################################################################
# SIMULATION
# ############################################################################

def test_quantum_simulation_is_deterministic():
    qm = induce_quantum_model(build("rnc"))
    first = simulate_hqmm(qm, 300, seed=5)
    assert first.as_text() == simulate_hqmm(qm, 300, seed=5).as_text()
    assert len(first.symbols) == 300


def test_quantum_simulation_of_absorbing_coin():
    qm = induce_quantum_model(build("perturbed-coin-em", {"eps": 1.0}))
    text = simulate_hqmm(qm, 5, seed=7).as_text()
    assert len(text) == 5 and len(set(text)) == 1
    assert simulate_hqmm(qm, 0, seed=7).as_text() == ""


def test_quantum_simulation_follows_allowed_transitions():
    model = build("rnc", {"p": 0.3, "q": 0.6})
    result = simulate_hqmm(induce_quantum_model(model), 2000, seed=2)
    for t in range(len(result.symbols) - 1):
        assert model.transitions[result.symbols[t], result.states[t], result.states[t + 1]] > 0


def test_generic_simulation_emits_known_symbols():
    result = simulate_generic_hqmm(build("monras-2level"), 200, seed=1)
    assert set(result.as_text()) <= set("0123")
    assert result.as_text() == simulate_generic_hqmm(build("monras-2level"), 200, seed=1).as_text()


def test_quantum_simulation_updates_through_the_induced_kraus_set(monkeypatch):
    built = []

    def recording(qm):
        h = induced_hqmm(qm)
        built.append(h)
        return h

    monkeypatch.setattr(quantum_model, "induced_hqmm", recording)
    qm = induce_quantum_model(build("rnc", {"p": 0.5, "q": 0.7}))
    first = simulate_hqmm(qm, 200, seed=4)
    assert len(built) == 1
    assert built[0].dimension == qm.dimension
    assert first.as_text() == simulate_hqmm(qm, 200, seed=4).as_text()


class EdgeRng:
    """Always draws the upper end of [0, 1)."""

    def random(self):
        return 1.0


def test_generic_step_skips_symbols_that_cannot_occur():
    h = make_generic_hqmm("edge", ["0", "1"], [[np.eye(2)], [np.zeros((2, 2))]], np.eye(2) / 2)
    r, updated = hqmm_step(h, EdgeRng())
    assert r == 0
    assert np.all(np.isfinite(updated.rho))
    assert np.trace(updated.rho).real == pytest.approx(1.0)
