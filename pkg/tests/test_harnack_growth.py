import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critgrad.harnack import (ContainmentError, barrier, barrier_mesh, calibrate_decay,
                              distribution_decay_check,
                              gisl_check, gisl_check_naive, growth_lemma_check,
                              interior_harnack_scaling, random_instance)
from critgrad.harnack.gisl import closure_superset
from critgrad.harnack.growth import cap_function
from critgrad.harnack.frames import cube_mask, frame_bounds, frame_mesh, vertical
from critgrad.harnack.properties import SUITES, decay_calibration


# frames ----------------------------------------------------------------------


def test_frames_sit_on_bottom_face():
    assert frame_bounds(1.5) == ((-0.75, 0.0), (0.75, 1.5))
    assert frame_bounds(4.0, dim=1) == ((0.0,), (4.0,))
    m = frame_mesh(1.5, 25)
    assert vertical(m).min() == 0.0
    q1 = cube_mask(m, 1.0)
    assert q1.any() and np.all(vertical(m)[q1] > 0) and np.all(vertical(m)[q1] < 1)


# barrier ---------------------------------------------------------------------


def test_cap_function_shape():
    c1 = 0.2
    outer = (3 - 2 * c1) / 4
    x = np.linspace(-outer, outer, 2001)
    eta = cap_function(x, c1)
    assert np.all(eta[np.abs(x) <= 0.5] == 0)
    assert eta[0] == pytest.approx(c1 / 2) and eta[-1] == pytest.approx(c1 / 2)
    assert eta.min() >= 0 and eta.max() <= c1 / 2 + 1e-15
    right = eta[x >= 0]
    assert np.all(np.diff(right) >= 0)


def test_barrier_formula_on_flat_part():
    delta = 0.1
    m = barrier_mesh(delta, 0.1, 129)
    b = barrier(delta, 0.1, m)
    xn = vertical(m)
    flat = np.abs(m.grids[0]) <= 0.5
    np.testing.assert_allclose(b.v[flat], xn[flat] ** 2 / delta + xn[flat], rtol=0, atol=1e-15)
    top = flat & np.isclose(xn, delta / 2)
    np.testing.assert_allclose(b.v[top], delta / 4 + delta / 2, rtol=1e-14)


@pytest.mark.parametrize("delta,c1", [(0.1, 0.1), (0.03, 0.2)])
@pytest.mark.parametrize("a", [0.0, 1.0])
def test_barrier_is_subsolution(delta, c1, a):
    b = barrier(delta, c1, barrier_mesh(delta, c1, 257), a=a)
    assert b.is_subsolution


def test_barrier_needs_small_delta_for_steep_cap():
    # with c1 = 0.2 the cap has |η''| ≈ 26, beyond the 1/δ = 10 available at δ = 0.1
    b = barrier(0.1, 0.2, barrier_mesh(0.1, 0.2, 257))
    assert not b.is_subsolution


def test_barrier_1d_residual():
    delta = 0.1
    b = barrier(delta, 0.2, barrier_mesh(delta, 0.2, 65, dim=1))
    assert b.max_residual == pytest.approx(-2 / delta, rel=1e-9)


@pytest.mark.parametrize("delta,c1", [(0.0, 0.2), (0.3, 0.2), (0.1, 0.5)])
def test_barrier_rejects_parameters(delta, c1):
    with pytest.raises(ValueError):
        barrier(delta, c1, barrier_mesh(0.1, 0.2, 33))


# growth lemma and decay ------------------------------------------------------


Q32 = frame_mesh(1.5, 49)
Q4 = frame_mesh(4.0, 65)


def test_growth_lemma_linear_is_boundary_case():
    rep = growth_lemma_check(Q32, vertical(Q32), nu=0.05)
    assert rep.status == "hypothesis-not-met"
    assert rep.lhs == pytest.approx(1.0)


def test_growth_lemma_zero_and_quadratic():
    assert growth_lemma_check(Q32, np.zeros(Q32.shape), 0.05).status == "hypothesis-not-met"
    delta = 0.1
    xn = vertical(Q32)
    rep = growth_lemma_check(Q32, xn ** 2 / delta + xn, 0.05)
    assert rep.verdict
    h = Q32.spacing[1]
    assert rep.lhs == pytest.approx(1 + h / delta)


def test_growth_lemma_scaling():
    xn = vertical(Q32)
    rep = growth_lemma_check(Q32, 3 * xn, 0.05)
    assert rep.verdict and rep.lhs == pytest.approx(3.0)
    assert rep.extra["measure"] == pytest.approx(
        float(np.sum(Q32.cell_volume[cube_mask(Q32, 1.0)])))


@pytest.mark.parametrize("u", ["linear", "zero"])
def test_decay_trivial_fields(u):
    field = vertical(Q4) if u == "linear" else np.zeros(Q4.shape)
    table = distribution_decay_check(Q4, field)
    assert table.verdict
    assert all(m == 0 for _, m, _, _ in table.rows)


def test_decay_detects_heavy_tail():
    xn = vertical(Q4)
    table = distribution_decay_check(Q4, xn * (1 + 1e4 * (Q4.grids[0] > 0)) + 0 * xn, M=2, mu=0.2)
    assert not table.verdict and table.worst_ratio >= 1


def test_decay_calibration_record():
    cal = decay_calibration()
    assert (cal["M"], cal["mu"]) == (4.0, 0.05)
    assert cal["worst_ratio_at_adopted"] < 1
    xn = vertical(Q4)
    assert calibrate_decay([(Q4, xn)], M_grid=(2.0, 4.0), mu_grid=(0.1, 0.2)) == (2.0, 0.2)


def test_interior_scaling_of_harmonic_function():
    # u = 1 + x² − y² + y is harmonic and positive on Q₁(e); the scaled
    # products should stay within a bounded factor as ρ shrinks
    out = interior_harnack_scaling(lambda x, y: 1 + x ** 2 - y ** 2 + y, rhos=(0.5, 0.25, 0.125))
    vals = np.array(list(out.values()))
    assert np.all(vals > 0)
    assert vals.max() / vals.min() < 1.1


# GISL ------------------------------------------------------------------------


def test_gisl_empty_and_single_cell():
    E = np.zeros((4, 4), bool)
    rep = gisl_check(E, E, 0.5, 2)
    assert rep.hypotheses_met and rep.c == pytest.approx(2.0)
    E1 = E.copy()
    E1[0, 0] = True
    rep = gisl_check(E1, E1, 0.5, 2)
    assert rep.status == "edge" and rep.c == 0


def test_gisl_violations():
    E = np.ones((4, 4), bool)
    rep = gisl_check(E, E, 0.5, 2)
    assert not rep.measure_ok and rep.status == "hypothesis-not-met"
    E = np.zeros((4, 4), bool)
    E[:2, :2] = True
    E[1, 1] = False  # 3/4 of the quadrant, which F = E does not contain
    rep = gisl_check(E, E, 0.5, 2)
    assert not rep.cube_condition_ok and rep.violating_cube == (1, 0, 0)
    F = np.zeros((4, 4), bool)
    with pytest.raises(ContainmentError):
        gisl_check(E, F, 0.5, 2)
    with pytest.raises(ValueError):
        gisl_check(E, E, 1.0, 2)
    with pytest.raises(ValueError):
        gisl_check(E, E, 0.5, 3)


@given(seed=st.integers(0, 2 ** 32 - 1), alpha=st.floats(0.1, 0.9), depth=st.integers(1, 4),
       dim=st.sampled_from([1, 2]))
@settings(max_examples=60)
def test_gisl_pyramid_matches_naive(seed, alpha, depth, dim):
    rng = np.random.default_rng(seed)
    E = rng.random((2 ** depth,) * dim) < rng.random()
    F = E | (rng.random(E.shape) < 0.3)
    a, b = gisl_check(E, F, alpha, depth), gisl_check_naive(E, F, alpha, depth)
    assert (a.c, a.hypotheses_met, a.violating_cube) == (b.c, b.hypotheses_met, b.violating_cube)


@given(seed=st.integers(0, 2 ** 32 - 1), alpha=st.floats(0.1, 0.9))
@settings(max_examples=60)
def test_gisl_closure_gives_positive_constant(seed, alpha):
    E, F = random_instance(np.random.default_rng(seed), alpha, 4)
    rep = gisl_check(E, F, alpha, 4)
    assert rep.hypotheses_met
    assert not np.any(E & ~closure_superset(E, alpha, 4) & ~F)
    assert rep.c >= 0


# property suites -------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(SUITES))
def test_property_suites_small(name):
    summary = SUITES[name](n=12, seed=3)
    assert summary.instances == 12
    assert summary.failures == 0, summary.line()
    assert summary.name in summary.line()
