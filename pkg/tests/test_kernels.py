"""Both kernel backends agree, and the stencils match closed forms."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from critgrad import kernels
from critgrad.kernels import get_backend

NP = get_backend("numpy")
NB = get_backend("numba")

finite = st.floats(-10, 10, allow_nan=False)


def _args(u, rng):
    shape = u.shape
    hs = tuple(1.0 / (n - 1) for n in shape)
    m = rng.uniform(-5, 5, shape)
    mu = rng.uniform(0, 2, shape)
    h = rng.uniform(-1, 1, shape)
    return hs, m, mu, h


@given(arrays(float, st.integers(3, 30), elements=finite))
def test_parity_1d(u):
    rng = np.random.default_rng(0)
    hs, m, mu, h = _args(u, rng)
    for name, args in [("neg_laplacian", (u, hs)), ("grad_sq", (u, hs)),
                       ("residual_direct", (u, m, mu, h, hs)),
                       ("p_laplacian_residual", (u, 3.0, np.abs(m), h, hs))]:
        a, b = getattr(NP, name)(*args), getattr(NB, name)(*args)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9 * (1 + np.max(np.abs(a))))


@given(arrays(float, st.tuples(st.integers(3, 12), st.integers(3, 12)), elements=finite),
       st.sampled_from([1.5, 2.0, 3.0]))
def test_parity_2d(u, p):
    rng = np.random.default_rng(1)
    hs, m, mu, h = _args(u, rng)
    w = np.abs(u)
    for name, args in [("neg_laplacian", (u, hs)), ("grad_sq", (u, hs)),
                       ("residual_direct", (u, m, mu, h, hs)),
                       ("residual_colehopf", (w, m, mu, h, 1.0, hs)),
                       ("p_laplacian_residual", (u, p, np.abs(m), h, hs))]:
        a, b = getattr(NP, name)(*args), getattr(NB, name)(*args)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9 * (1 + np.max(np.abs(a))))


@given(st.integers(1, 4), st.data())
def test_block_sum_parity(depth, data):
    dim = data.draw(st.sampled_from([1, 2]))
    cells = data.draw(arrays(bool, (2 ** depth,) * dim))
    for level in range(depth + 1):
        np.testing.assert_array_equal(NP.dyadic_block_sums(cells, level),
                                      NB.dyadic_block_sums(cells, level))
    assert NP.dyadic_block_sums(cells, 0).ravel()[0] == cells.sum()


def test_laplacian_of_quadratic_is_exact():
    x = np.linspace(0, 1, 17)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u = X ** 2 + 3 * Y ** 2
    lap = kernels.neg_laplacian(u, (1 / 16, 1 / 16))
    np.testing.assert_allclose(lap[1:-1, 1:-1], -8.0, rtol=1e-10)


def test_centered_gradient_of_quadratic_is_exact():
    x = np.linspace(0, 1, 9)
    (g,) = kernels.centered_gradient(x ** 2, (1 / 8,))
    np.testing.assert_allclose(g[1:-1], 2 * x[1:-1], atol=1e-13)


def test_p_laplacian_linear_profile_is_p_harmonic():
    x = np.linspace(0, 1, 21)
    for p in (1.5, 2.0, 3.0):
        r = kernels.p_laplacian_residual(2 * x, p, np.zeros(21), np.zeros(21), (0.05,))
        np.testing.assert_allclose(r, 0.0, atol=1e-12)


def test_env_var_selects_numpy_backend():
    code = "from critgrad import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, CRITGRAD_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("CRITGRAD_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")
