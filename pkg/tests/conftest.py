import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hypersync.group import Variant, haar_array
from hypersync.hypergraph import UniformHypergraph, tau_array

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[Variant.SO2, Variant.SO3], ids=["SO2", "SO3"])
def variant(request):
    return request.param


def complete_instance(variant, m, n, rng, bad=()):
    """Complete n-uniform hypergraph with exact measurements except on ``bad`` ids."""
    edges = np.array(list(itertools.combinations(range(m), n)), dtype=np.int64)
    g = haar_array(rng, variant, (m,))
    meas = tau_array(variant, g[edges])
    for h in bad:
        meas[h] = haar_array(rng, variant, (n - 1,))
    return UniformHypergraph(m, n, variant, edges, meas), g
