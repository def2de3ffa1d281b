import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from critgrad import solver as S
from critgrad.coefficients import builtin_benchmark, from_arrays
from critgrad.mesh import build_interval_mesh, build_rectangle_mesh
from conftest import benchmark


def _quadratic_problem_1d(n=33, mu=1.0):
    """Coefficients with u* = x(1 − x) as exact discrete solution (h absorbs everything)."""
    mesh = build_interval_mesh(0, 1, n)
    x = mesh.axes[0]
    u = x * (1 - x)
    cp = np.where(np.abs(x - 0.5) < 0.2, 1.0, 0.0)
    h = 2.0 - cp * u - mu * (1 - 2 * x) ** 2
    return from_arrays(mesh, cp, 0.0, mu, h, 1.0, 0.1), u


def test_residual_vanishes_on_exact_quadratic():
    coeffs, u = _quadratic_problem_1d()
    r = S.residual(u, 1.0, coeffs)
    assert np.max(np.abs(r)) < 1e-12
    assert np.all(r[coeffs.mesh.boundary_mask] == 0)


def test_newton_recovers_quadratic():
    coeffs, u = _quadratic_problem_1d()
    sol = S.newton_solve(coeffs.mesh.zeros(), 1.0, coeffs)
    assert np.max(np.abs(sol.u - u)) < 1e-12
    assert sol.residual_norm <= sol.tolerance


@pytest.mark.parametrize("variable", ["direct-u", "cole-hopf"])
def test_jacobian_matches_central_differences(variable, rng):
    coeffs, mesh = builtin_benchmark("1d-signchanging-h", 33)
    u = mesh.zeros()
    u[mesh.interior_mask] = 0.3 * rng.random(mesh.interior_shape)
    if variable == "direct-u":
        F, J, x = S.residual, S.jacobian, u
    else:
        F, J, x = S.residual_colehopf, S.jacobian_colehopf, S.cole_hopf_forward(u, coeffs.mu2)
    lam = 0.7
    Jd = J(x, lam, coeffs).toarray()
    inner = np.flatnonzero(mesh.interior_mask)
    eps = 1e-6
    for col, node in enumerate(inner[::5]):
        e = np.zeros(mesh.size)
        e[node] = eps
        e = e.reshape(mesh.shape)
        fd = (F(x + e, lam, coeffs) - F(x - e, lam, coeffs))[mesh.interior_mask] / (2 * eps)
        np.testing.assert_allclose(Jd[:, col * 5], fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(fd)))


def test_cole_hopf_round_trip_and_errors():
    u = np.linspace(-3, 50, 101)
    w = S.cole_hopf_forward(u, 1.0)
    np.testing.assert_allclose(S.cole_hopf_inverse(w, 1.0), u, rtol=1e-14, atol=1e-15)
    with pytest.raises(OverflowError):
        S.cole_hopf_forward(np.array([800.0]), 1.0)
    with pytest.raises(S.TransformDomainError) as err:
        S.cole_hopf_inverse(np.array([0.0, -2.0]), 1.0)
    assert err.value.nodes.tolist() == [1]


# For μu ≪ 0, 1 + μw = e^{μu} underflows relative to 1 and the inverse loses
# digits, so the property is stated for μu ≥ −3.
@given(arrays(float, 20, elements=st.floats(-3, 40)), st.floats(0.1, 1.0))
def test_cole_hopf_inverse_property(u, mu):
    back = S.cole_hopf_inverse(S.cole_hopf_forward(u, mu), mu)
    np.testing.assert_allclose(back, u, rtol=1e-12, atol=1e-13)


def test_solution_at_zero_is_nondegenerate():
    coeffs, mesh, u0 = benchmark("1d-basic")
    assert u0.jacobian_signature == 1
    assert np.all(u0.u >= 0)
    assert np.all(u0.u[mesh.boundary_mask] == 0)


@pytest.mark.parametrize("variable", ["direct-u", "cole-hopf"])
def test_both_variables_give_same_solution(variable):
    coeffs, mesh, u0 = benchmark("1d-basic")
    sol = S.newton_solve(mesh.zeros(), 0.3, coeffs, S.SolverOptions(variable=variable))
    ref = S.newton_solve(mesh.zeros(), 0.3, coeffs)
    # the two schemes differ by O(h²)
    assert np.max(np.abs(sol.u - ref.u)) < 1e-3 * ref.sup_norm


def test_lower_upper_checks_bracket():
    coeffs, mesh, u0 = benchmark("1d-basic")
    alpha = u0.u - np.max(np.abs(u0.u))
    alpha[mesh.boundary_mask] = np.minimum(alpha[mesh.boundary_mask], 0)
    assert S.check_upper_solution(u0.u, -1.0, coeffs)
    assert S.check_lower_solution(alpha, -1.0, coeffs)
    assert not S.check_lower_solution(u0.u + 1.0, -1.0, coeffs)


def test_monotone_iterate_between_bounds():
    coeffs, mesh, u0 = benchmark("1d-basic")
    alpha = u0.u - np.max(u0.u)
    sol = S.monotone_iterate(alpha, u0.u, -1.0, coeffs)
    assert np.all(sol.u <= u0.u + 1e-10)
    assert np.all(sol.u >= alpha - 1e-10)


def test_options_validation():
    with pytest.raises(ValueError):
        S.SolverOptions(variable="w")
    with pytest.raises(ValueError):
        S.SolverOptions(newton_tol=0)


def test_effective_tolerance_grows_with_scale():
    coeffs, mesh, u0 = benchmark("1d-basic")
    opts = S.SolverOptions()
    small = S.effective_tolerance(u0.u, 0.0, coeffs, opts)
    big = S.effective_tolerance(1e6 * u0.u, 0.0, coeffs, opts)
    assert small == pytest.approx(opts.newton_tol)
    assert big > small


# p-Laplacian -------------------------------------------------------------


def _flux_oracle(mesh, p):
    """Exact discrete solution of −(|u'|^{p−2}u')' = 1 on (0, 1), u = 0 at both ends."""
    x = mesh.axes[0]
    h = mesh.spacing[0]
    faces = 0.5 * (x[1:] + x[:-1])
    F = 0.5 - faces
    d = np.sign(F) * np.abs(F) ** (1.0 / (p - 1.0))
    return np.concatenate([[0.0], np.cumsum(h * d)])


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_p_laplacian_matches_flux_oracle(p):
    mesh = build_interval_mesh(0, 1, 65)
    u = S.solve_p_laplacian(mesh, p, 0.0, 1.0)
    np.testing.assert_allclose(u, _flux_oracle(mesh, p), atol=1e-9)


def test_p2_source_one_gives_parabola():
    mesh = build_interval_mesh(0, 1, 33)
    x = mesh.axes[0]
    np.testing.assert_allclose(S.solve_p_laplacian(mesh, 2.0, 0.0, 1.0), x * (1 - x) / 2, atol=1e-14)


def test_p_laplacian_2d_residual_small():
    mesh = build_rectangle_mesh(((0, 0), (1, 1)), 17, 17)
    u = S.solve_p_laplacian(mesh, 3.0, 0.5, 1.0)
    r = S.p_laplacian_residual(u, 3.0, 0.5, 1.0, mesh=mesh)
    assert np.max(np.abs(r)) < 1e-8
    assert np.all(u >= 0)


def test_p_must_exceed_one():
    mesh = build_interval_mesh(0, 1, 9)
    with pytest.raises(ValueError):
        S.p_laplacian_residual(np.zeros(9), 1.0, 0.0, 0.0, mesh=mesh)
    with pytest.raises(ValueError):
        S.solve_p_laplacian(mesh, 0.5, 0.0, 1.0)
