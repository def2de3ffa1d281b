import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critgrad.harnack import (GeometryError, HypothesisError, SampleError, SupersolutionSample,
                              boundary_weak_harnack, comparison_check, generate_supersolution,
                              interior_weak_harnack, scan_epsilon, verify)
from critgrad.harnack.inequalities import (brezis_cabre_check, local_max_principle_check,
                                           negative_source_correction, sup_ratio_to_distance)
from critgrad.harnack.suites import boundary_suite, unit_mesh
from critgrad.mesh import Region, build_interval_mesh, measure, region_mask
from critgrad.solver import solve_p_laplacian

M2 = unit_mesh(33)
M1 = build_interval_mesh(0, 1, 129)


def _linear_sample(mesh):
    # u = x_N is harmonic, hence a supersolution with a = 0
    return SupersolutionSample(mesh, mesh.grids[-1].copy(), np.zeros(mesh.shape), 2.0)


# samples ---------------------------------------------------------------------


@pytest.mark.parametrize("generator", ["solve-with-source", "radial"])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_generated_samples_are_supersolutions(generator, p):
    smp = generate_supersolution(3, M2, p=p, a=0.5, generator=generator)
    assert smp.u.min() >= 0 and smp.u.max() > 0
    assert smp.violation() <= 1e-8 * max(1.0, np.abs(smp.source).max() if smp.source is not None else 1)


def test_samples_are_deterministic():
    a = generate_supersolution(11, M2)
    b = generate_supersolution(11, M2)
    c = generate_supersolution(12, M2)
    assert np.array_equal(a.u, b.u)
    assert not np.array_equal(a.u, c.u)


def test_sample_errors():
    with pytest.raises(ValueError):
        generate_supersolution(0, M2, p=1.0)
    with pytest.raises(ValueError):
        generate_supersolution(0, M2, a=-1.0)
    with pytest.raises(ValueError):
        generate_supersolution(0, M2, generator="barrier")
    bad = SupersolutionSample(M1, -M1.grids[0] * (1 - M1.grids[0]), np.zeros(M1.shape), 2.0)
    with pytest.raises(SampleError):
        verify(bad)
    # x(1-x) flipped: -x^2 + ... fails the residual sign
    sub = SupersolutionSample(M1, M1.grids[0] ** 2, np.zeros(M1.shape), 2.0)
    with pytest.raises(SampleError):
        verify(sub)


def test_signed_source_tolerated_only_up_to_negative_part():
    smp = generate_supersolution(5, M2, signed=0.5)
    assert smp.source.min() < 0
    assert smp.residual()[M2.interior_mask].min() < 0
    assert smp.violation() <= 1e-8 * np.abs(smp.source).max()


# interior weak Harnack -------------------------------------------------------


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_interior_constant_of_constant_function(s):
    u = np.ones(M2.shape)
    smp = SupersolutionSample(M2, u, np.zeros(M2.shape), 2.0)
    rep = interior_weak_harnack(smp, (0.5, 0.5), 0.1, s=s)
    meas = measure(M2, region_mask(M2, Region.ball((0.5, 0.5), 0.2)))
    assert rep.lhs == 1.0
    assert rep.constant == pytest.approx(meas ** (-1 / s), rel=1e-12)


@given(t=st.floats(1e-3, 1e3), seed=st.integers(0, 50))
@settings(max_examples=15)
def test_interior_constant_is_scale_invariant_for_s_one(t, seed):
    smp = generate_supersolution(seed, M2)
    c0 = interior_weak_harnack(smp, (0.5, 0.5), 0.1).constant
    c1 = interior_weak_harnack(smp.scaled(t), (0.5, 0.5), 0.1).constant
    assert c1 == pytest.approx(c0, rel=1e-10)


def test_interior_geometry_and_penalty():
    smp = generate_supersolution(1, M2)
    with pytest.raises(GeometryError):
        interior_weak_harnack(smp, (0.5, 0.5), 0.2)
    with pytest.raises(ValueError):
        interior_weak_harnack(smp, (0.5, 0.5), 0.1, s=0)
    b = -np.ones(M2.shape)
    rep = interior_weak_harnack(smp, (0.5, 0.5), 0.1, b=b)
    assert rep.extra["subtracted"] > 0
    assert rep.rhs == pytest.approx(rep.extra["integral"] - rep.extra["subtracted"])


# boundary weak Harnack -------------------------------------------------------


@pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
def test_boundary_constant_of_linear_function(eps):
    # near (0.5, 0) the distance is x_2, so u/d ≡ 1 on the cut ball
    rep = boundary_weak_harnack(_linear_sample(M2), (0.5, 0.0), 0.2, eps)
    region = region_mask(M2, Region.ball((0.5, 0.0), 0.2)) & M2.interior_mask
    assert rep.lhs == pytest.approx(1.0, rel=1e-12)
    assert rep.constant == pytest.approx(measure(M2, region) ** (-1 / eps), rel=1e-12)


@given(t=st.floats(1e-3, 1e3), seed=st.integers(0, 50))
@settings(max_examples=15)
def test_boundary_constant_homogeneous(t, seed):
    smp = generate_supersolution(seed, M2)
    c0 = boundary_weak_harnack(smp, (0.5, 0.0), 0.2).constant
    c1 = boundary_weak_harnack(smp.scaled(t), (0.5, 0.0), 0.2).constant
    assert c1 == pytest.approx(c0, rel=1e-10)


def test_boundary_errors():
    smp = _linear_sample(M2)
    with pytest.raises(GeometryError):
        boundary_weak_harnack(smp, (0.5, 0.5), 0.2)
    with pytest.raises(GeometryError):
        boundary_weak_harnack(smp, (0.5, 0.0), 0.3, R_bar=0.25)
    with pytest.raises(ValueError):
        boundary_weak_harnack(smp, (0.5, 0.0), 0.2, epsilon=0.0)


def test_boundary_signed_source_correction():
    m = unit_mesh(33)
    b = np.zeros(m.shape)
    b[10:20, 10:20] = -1.0
    sup, w = negative_source_correction(m, 0.0, b)
    assert sup > 0 and w.min() >= 0
    assert sup == pytest.approx(sup_ratio_to_distance(m, w))
    rep = boundary_weak_harnack(generate_supersolution(2, m, signed=0.3), (0.5, 0.0), 0.2,
                                b=b)
    assert rep.extra["subtracted"] == pytest.approx(sup)
    assert negative_source_correction(m, 0.0, np.ones(m.shape))[0] == 0.0


def test_boundary_suite_small_is_deterministic_and_passes():
    r1 = boundary_suite(n_samples=8, resolution=33, seed=4)
    r2 = boundary_suite(n_samples=8, resolution=33, seed=4, threads=3)
    assert np.array_equal(r1.constants, r2.constants)
    assert r1.failures == 0 and r1.min_constant > 0


def test_scan_epsilon_structure():
    samples = [generate_supersolution(s, M2) for s in range(4)]
    rows = scan_epsilon(samples, (0.5, 0.0), 0.2, (1.0, 0.25, 0.5))
    assert [r["epsilon"] for r in rows] == [0.25, 0.5, 1.0]
    assert all(r["bounded"] for r in rows)
    assert [r["best"] for r in rows] == [False, False, True]
    with pytest.raises(ValueError):
        scan_epsilon([], (0.5, 0.0), 0.2)
    with pytest.raises(ValueError):
        scan_epsilon(samples, (0.5, 0.0), 0.2, (0.5, 1.5))


# Brezis-Cabré and maximum principles ----------------------------------------


def test_brezis_cabre_green_function_oracle():
    # −u'' = 1 on (1/4, 3/4): inf u/d = u(1/2)/(1/2) = 3/16, ∫f = 1/2, so C = 3/8
    m = build_interval_mesh(0, 1, 801)
    x = m.grids[0]
    f = ((x > 0.25) & (x < 0.75)).astype(float)
    u = solve_p_laplacian(m, 2.0, np.zeros(m.shape), f)
    rep = brezis_cabre_check(m, u, 0.0, f, (0.5,), 0.25)
    assert rep.verdict
    assert rep.constant == pytest.approx(0.375, rel=2e-3)


def test_brezis_cabre_hypotheses():
    x = M1.grids[0]
    with pytest.raises(HypothesisError):
        brezis_cabre_check(M1, x * (1 - x), 0.0, -np.ones(M1.shape), (0.5,), 0.1)
    with pytest.raises(HypothesisError):  # −u'' = −2 < f = 1: not an upper solution
        brezis_cabre_check(M1, x ** 2, 0.0, np.ones(M1.shape), (0.5,), 0.1)
    with pytest.raises(GeometryError):
        brezis_cabre_check(M1, x * (1 - x), 0.0, np.ones(M1.shape), (0.5,), 0.3)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_local_max_principle_constant_function(s):
    u = np.ones(M2.shape)
    rep = local_max_principle_check(M2, u, 0.0, 0.0, (0.5, 0.5), 0.1, s=s)
    meas = measure(M2, region_mask(M2, Region.ball((0.5, 0.5), 0.2)))
    assert rep.verdict and rep.direction == "upper"
    assert rep.constant == pytest.approx(meas ** (-1 / s), rel=1e-12)


def test_local_max_principle_boundary_form_and_errors():
    x, y = M2.grids
    u = x * (1 - x) * y * (1 - y)  # −Δu ≥ 0, so u solves −Δu ≤ b with b = −Δu
    from critgrad.solver import p_laplacian_residual
    b = p_laplacian_residual(u, 2.0, 0.0, 0.0, mesh=M2)
    rep = local_max_principle_check(M2, u, 0.0, b, (0.5, 0.0), 0.2, boundary=True)
    assert rep.verdict and rep.inequality == "boundary-local-max-principle"
    with pytest.raises(HypothesisError):
        local_max_principle_check(M2, u, 0.0, 0.0, (0.5, 0.5), 0.1)
    with pytest.raises(GeometryError):
        local_max_principle_check(M2, u, 0.0, b, (0.5, 0.5), 0.1, boundary=True)


def test_comparison():
    v = generate_supersolution(7, M2).u
    res = comparison_check(M2, np.zeros(M2.shape), v, 2.0, 0.0)
    assert res.hypotheses_met and res.verdict
    res = comparison_check(M2, 2 * v + 1, v, 2.0, 0.0)
    assert not res.hypotheses_met and res.verdict
