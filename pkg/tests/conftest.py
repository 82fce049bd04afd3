import os
import sys

import numpy as np
import pytest

# Same trick as main.py: make the project packages importable without installation.
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, PROJECT_ROOT)

from core_logic.hmm_core import make_hmm  # noqa: E402
from hqmm_lib.config import APP_CONFIG, SCRIPT_DEFAULTS  # noqa: E402
from hqmm_lib.errors import StationaryDistributionError  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical tests with 10^5 or more samples")
    config.addinivalue_line("markers", "property: property-based invariant tests")


@pytest.fixture(autouse=True)
def default_config(tmp_path, monkeypatch):
    """Script defaults for every test; logs go to a temporary file."""
    APP_CONFIG.clear()
    APP_CONFIG.update(SCRIPT_DEFAULTS)
    monkeypatch.setenv("HQMM_LOG_FILE", str(tmp_path / "hqmm_test.log"))
    monkeypatch.delenv("HQMM_CONFIG_FILE", raising=False)
    monkeypatch.delenv("HQMM_JOBS", raising=False)
    yield APP_CONFIG
    APP_CONFIG.clear()
    APP_CONFIG.update(SCRIPT_DEFAULTS)


def random_hmm(rng, n, m, density=0.6, min_weight=0.01):
    """Seeded random valid HMM with a unique stationary distribution whose weights are all >= min_weight."""
    states = [f"s{i}" for i in range(n)]
    symbols = [str(r) for r in range(m)]
    while True:
        values = rng.uniform(0.2, 1.0, size=(m, n, n))
        mask = rng.random((m, n, n)) < density
        for i in range(n):
            if not mask[:, i, :].any():
                mask[rng.integers(m), i, rng.integers(n)] = True
        transitions = values * mask
        transitions /= transitions.sum(axis=(0, 2), keepdims=True)
        try:
            model = make_hmm(f"random-{n}x{m}", states, symbols, transitions)
        except StationaryDistributionError:
            continue
        if model.initial.min() >= min_weight:
            return model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def project_root():
    return PROJECT_ROOT
