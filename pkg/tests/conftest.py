import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from critgrad import continuation as C
from critgrad import solver as S
from critgrad.coefficients import builtin_benchmark

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def benchmark(name, resolution=None):
    """(coeffs, mesh, u0) for a catalog problem, cached across tests."""
    coeffs, mesh = builtin_benchmark(name, resolution)
    u0 = S.newton_solve(mesh.zeros(), 0.0, coeffs)
    return coeffs, mesh, u0


@functools.lru_cache(maxsize=None)
def forward_branch(name, resolution=None):
    coeffs, mesh, u0 = benchmark(name, resolution)
    return C.trace_branch(u0, 1, coeffs=coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines are collected here and echoed in the terminal summary, so
# they show up in plain ``pytest -v`` output without ``-s``
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
