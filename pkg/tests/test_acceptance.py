"""End-to-end checks of the catalog models against their closed forms and against each other."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_hmm
from core_logic.alt_quantum import build_diagonal_construction, compare_constructions
from core_logic.classifier import GRAM_ORTHOGONAL, ModelMetrics, analyze_model, assert_impossible_cases, classify_gram
from core_logic.hmm_core import (
    empirical_block_distribution, max_length_within_budget, sample, total_variation, word_distribution,
)
from core_logic.info_metrics import channel_mutual_information, excess_curve, shannon_entropy
from core_logic.quantum_model import (
    density_spectrum, full_density_spectrum, holevo_report, hqmm_word_distribution, induce_quantum_model,
    simulate_generic_hqmm, simulate_hqmm,
)
from hqmm_lib.param_tools import parameter_grid
from services.catalog import CATALOG, build, perturbed_coin_extras


def h2(x):
    return shannon_entropy([x, 1 - x])


def rnc_excess(p, q):
    merged_mass = (p + q * (1 - p)) / 2
    if merged_mass == 0.0:
        return 1 + h2(p) / 2
    return 1 + h2(p) / 2 - merged_mass * h2(p / (p + q * (1 - p)))


def rnc_spectrum(p, q):
    root = math.sqrt(max(0.0, 1 - 4 * p + 4 * p * p + 4 * p * q - 4 * p * p * q))
    return sorted([0.5, 0.25 * (1 + root), 0.25 * (1 - root)], reverse=True)


GRID = parameter_grid(0.0, 1.0, 0.05)
INNER = [p for p in GRID if 0.1 - 1e-12 <= p <= 0.9 + 1e-12]


# ############################################################################
# RANDOM NOISY COPY
# ############################################################################

def test_rnc_closed_forms_on_the_full_grid():
    for p in GRID:
        for q in GRID:
            model = build("rnc", {"p": p, "q": q})
            qm = induce_quantum_model(model)
            assert shannon_entropy(model.initial) == pytest.approx(1 + h2(p) / 2, abs=1e-9)
            assert channel_mutual_information(model) == pytest.approx(rnc_excess(p, q), abs=1e-9)
            assert_allclose(density_spectrum(qm), rnc_spectrum(p, q), atol=1e-9)


def test_rnc_exact_excess_entropy_with_epsilon_machine_assertion():
    for p in INNER:
        for q in (0.0, 0.3, 0.7):
            report = analyze_model(build("rnc", {"p": p, "q": q}), block_depth=2, assert_epsilon_machine=True)
            assert report.e_exact == pytest.approx(rnc_excess(p, q), abs=1e-9)


def test_rnc_noiseless_sweep_is_case_i():
    for p in GRID:
        report = analyze_model(build("rnc", {"p": p, "q": 0.0}), block_depth=2)
        assert report.case_label == "i"
        assert abs(report.c_q - report.h_mu) <= 1e-9


def test_rnc_duplicate_sweep_is_case_iii():
    for p in INNER:
        report = analyze_model(build("rnc", {"p": p, "q": 1.0}), block_depth=2)
        assert report.case_label == "iii"
        assert report.i_xy == pytest.approx(report.c_q, abs=1e-9)
        assert report.h_mu - report.c_q >= 1e-6


def test_rnc_noisy_sweep_has_a_strict_chain():
    for p in INNER:
        report = analyze_model(build("rnc", {"p": p, "q": 0.7}), block_depth=2)
        assert report.case_label == "v"
        assert report.c_q - report.i_xy >= 1e-6
        assert report.h_mu - report.c_q >= 1e-6


# ############################################################################
# PERTURBED COIN
# ############################################################################

def test_perturbed_coin_closed_forms():
    for eps in parameter_grid(0.05, 0.95, 0.05):
        extras = perturbed_coin_extras(eps)
        markov = 0.5 * ((1 + eps) * math.log2(1 + eps) + (1 - eps) * math.log2(1 - eps))
        assert extras["i_markov"] == pytest.approx(markov, abs=1e-9)
        assert extras["i_3state"] == pytest.approx(eps, abs=1e-9)
        printed = -eps * math.log2(eps / 2) - (1 - eps) * math.log2(1 - eps)
        assert extras["h_p_3state"] == pytest.approx(printed, abs=1e-9)


def test_three_state_generator_undercuts_statistical_complexity_for_small_eps():
    for eps in parameter_grid(0.05, 0.2, 0.05):
        extras = perturbed_coin_extras(eps)
        assert extras["c_epsilon"] == pytest.approx(1.0)
        assert extras["h_p_3state"] < extras["c_epsilon"]


# ############################################################################
# FOUR-SYMBOL PROCESS AND ITS TWO-LEVEL MODEL
# ############################################################################

def test_four_symbol_exhibit():
    comparison = compare_constructions(build("four-symbol"))
    assert comparison.h_mu == pytest.approx(2.0, abs=1e-9)
    assert comparison.i_xy == pytest.approx(0.5, abs=1e-9)
    assert comparison.c_q_diagonal == pytest.approx(2.0, abs=1e-9)
    assert comparison.c_q_induced == pytest.approx(1.2018, abs=5e-4)
    assert comparison.monras_entropy == pytest.approx(1.0, abs=1e-9)
    h = build("monras-2level")
    classical = build("four-symbol")
    for length in range(1, 5):
        assert_allclose(hqmm_word_distribution(h, length).dense(),
                        word_distribution(classical, length).dense(), atol=1e-9)


# ############################################################################
# INEQUALITY CHAIN ON RANDOM MODELS
# ############################################################################

def check_random_model(model):
    qm = induce_quantum_model(model)
    metrics = ModelMetrics.from_quantum_model(qm)
    depth = min(6, max_length_within_budget(model.m) // 2)
    curve = excess_curve(model, depth)
    for _, e_l in curve.points:
        assert e_l <= metrics.i_xy + 1e-8
    assert metrics.i_xy <= metrics.c_q + 1e-8
    assert metrics.c_q <= metrics.h_mu + 1e-8

    orthogonal = classify_gram(qm.gram, qm.weights) == GRAM_ORTHOGONAL
    assert (abs(metrics.c_q - metrics.h_mu) <= 1e-8) == orthogonal
    holevo = holevo_report(qm)
    assert holevo.gap >= -1e-8
    assert (holevo.gap <= 1e-8) == holevo.commuting
    assert assert_impossible_cases(metrics)


def test_random_models_quick(rng):
    for _ in range(25):
        check_random_model(random_hmm(rng, int(rng.integers(1, 5)), int(rng.integers(1, 3))))


@pytest.mark.slow
def test_random_models_full(rng):
    for _ in range(500):
        check_random_model(random_hmm(rng, int(rng.integers(1, 7)), int(rng.integers(1, 4))))


# ############################################################################
# CONVERGENCE OF THE EXCESS-ENTROPY CURVE
# ############################################################################

@pytest.mark.parametrize("eps", [0.2, 0.5, 0.8])
def test_markov_coin_curve_reaches_the_channel_information(eps):
    model = build("perturbed-coin-em", {"eps": eps})
    assert abs(excess_curve(model, 10).last - channel_mutual_information(model)) <= 0.01


def test_four_symbol_curve_reaches_the_channel_information():
    model = build("four-symbol")
    assert abs(excess_curve(model, 5).last - channel_mutual_information(model)) <= 0.01


@pytest.mark.parametrize("p, q", [(0.2, 0.2), (0.5, 0.5), (0.8, 0.3), (0.5, 1.0)])
def test_rnc_curve_approaches_the_channel_information(p, q):
    # rnc has period two, so E_L only approaches I(X;Y) geometrically
    model = build("rnc", {"p": p, "q": q})
    i_xy = channel_mutual_information(model)
    curve = excess_curve(model, 10)
    values = [e for _, e in curve.points]
    assert curve.is_monotone()
    assert values[-1] <= i_xy + 1e-8
    assert i_xy - values[-1] < i_xy - values[4]


# ############################################################################
# SIMULATION AND SPECTRUM ORACLES
# ############################################################################

HMM_ENTRIES = [e.id for e in CATALOG.values() if e.kind == "hmm"]


def simulated_streams(model, steps, seed):
    construction = build_diagonal_construction(model)
    return {
        "classical": sample(model, steps, seed=seed).symbols,
        "induced": simulate_hqmm(induce_quantum_model(model), steps, seed=seed + 1).symbols,
        "diagonal": simulate_generic_hqmm(construction.hqmm, steps, seed=seed + 2).symbols,
    }


@pytest.mark.slow
@pytest.mark.parametrize("entry_id", HMM_ENTRIES)
def test_simulators_match_exact_words(entry_id):
    model = build(entry_id)
    exact = word_distribution(model, 3).dense()
    classical = sample(model, 1_000_000, seed=2024).symbols
    quantum = simulate_hqmm(induce_quantum_model(model), 1_000_000, seed=2025).symbols
    diagonal = simulate_generic_hqmm(build_diagonal_construction(model).hqmm, 300_000, seed=2026).symbols
    assert total_variation(empirical_block_distribution(classical, 3, model.m), exact) <= 0.01
    assert total_variation(empirical_block_distribution(quantum, 3, model.m), exact) <= 0.01
    # the generic Kraus simulator is far slower, so it gets fewer steps
    assert total_variation(empirical_block_distribution(diagonal, 3, model.m), exact) <= 0.02


@pytest.mark.parametrize("entry_id", HMM_ENTRIES)
def test_simulators_match_exact_words_quick(entry_id):
    model = build(entry_id)
    exact = word_distribution(model, 2).dense()
    for name, symbols in simulated_streams(model, 20_000, seed=11).items():
        tv = total_variation(empirical_block_distribution(symbols, 2, model.m), exact)
        assert tv <= 0.06, f"{name} simulator: TV {tv:.4f}"


@pytest.mark.parametrize("entry_id", HMM_ENTRIES)
def test_spectrum_oracle_on_catalog_models(entry_id):
    model = build(entry_id)
    assert model.n * model.m <= 16
    qm = induce_quantum_model(model)
    full = full_density_spectrum(qm)
    padded = np.zeros(len(full))
    padded[:model.n] = density_spectrum(qm)
    assert np.max(np.abs(np.clip(full, 0.0, None) - padded)) <= 1e-9
