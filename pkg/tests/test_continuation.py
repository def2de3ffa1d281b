import numpy as np
import pytest

from critgrad import continuation as C
from critgrad import solver as S
from critgrad.coefficients import builtin_benchmark
from critgrad.mesh import Region, build_interval_mesh, region_mask
from conftest import benchmark, forward_branch


def test_default_variable_rule():
    assert C.default_variable(builtin_benchmark("1d-basic")[0]) == "cole-hopf"
    assert C.default_variable(builtin_benchmark("1d-mu-variable")[0]) == "direct-u"


def test_forward_branch_has_fold_and_caps():
    br = forward_branch("1d-basic")
    fold = C.detect_fold(br)
    assert fold.found and 0 < fold.lam_bar < 5
    assert br.stop_reason == "sup-cap"
    assert br.points[fold.index].lam <= fold.lam_bar
    # signature flips across the fold
    sig = [p.jacobian_signature for p in br.points]
    assert sig[0] == 1 and sig[-1] == -1
    assert np.all(np.diff(br.arclengths) > 0)


def test_tangent_lambda_small_at_fold():
    br = forward_branch("1d-basic")
    fold = C.detect_fold(br)
    tl = [abs(p.tangent_lambda) for p in br.points]
    assert min(tl) < 1e-2
    assert br.points[fold.index].fold or br.points[fold.index + 1].fold or br.points[fold.index - 1].fold


def test_solutions_at_half_fold():
    br = forward_branch("1d-basic")
    fold = C.detect_fold(br)
    sols = C.solutions_at(br, fold.lam_bar / 2)
    assert len(sols) == 2
    assert sorted(s.jacobian_signature for s in sols) == [-1, 1]
    assert C.solutions_at(br, fold.lam_bar * 1.5) == []


def test_solutions_at_outside_range():
    br = forward_branch("1d-basic")
    with pytest.raises(ValueError):
        C.solutions_at(br, -10.0)


def test_backward_branch_is_monotone():
    coeffs, mesh, u0 = benchmark("1d-basic")
    ctl = C.ContinuationControls(lambda_min=-2.0)
    br = C.trace_branch(u0, -1, ctl, coeffs=coeffs)
    assert br.stop_reason == "lambda-bound"
    assert not C.detect_fold(br).found
    assert np.all(np.diff(br.lambdas) < 0)
    # for λ ≤ 0 the sup norm decreases along the branch; the start agrees with
    # the direct solve up to the Cole-Hopf discretization difference
    assert np.all(np.diff(br.sup_norms) < 0)
    assert br.sup_norms[0] == pytest.approx(u0.sup_norm, rel=1e-3)


def test_controls_validation():
    with pytest.raises(ValueError):
        C.ContinuationControls(initial_step=2.0, max_step=1.0)
    with pytest.raises(ValueError):
        C.ContinuationControls(variable="x")
    coeffs, mesh, u0 = benchmark("1d-basic")
    with pytest.raises(ValueError):
        C.trace_branch(u0, 0, coeffs=coeffs)


def test_detect_fold_needs_points():
    br = forward_branch("1d-basic")
    short = C.Branch(br.points[:2], br.coeffs, br.variable, "max-points", {})
    with pytest.raises(ValueError):
        C.detect_fold(short)


# threshold -----------------------------------------------------------------


@pytest.mark.parametrize("R", [0.1, 0.2, 0.25])
def test_first_eigenvalue_1d_ball(R):
    mesh = build_interval_mesh(0, 1, 401)
    mask = region_mask(mesh, Region.ball((0.5,), R))
    gamma, phi, _ = C.first_weighted_eigenpair(mesh, mask, np.ones(mesh.shape))
    assert gamma == pytest.approx((np.pi / (2 * R)) ** 2, rel=1e-3)
    assert np.all(phi >= 0) and phi.max() == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["1d-basic", "1d-signchanging-h", "2d-basic"])
def test_threshold_above_fold(name):
    coeffs, mesh, u0 = benchmark(name)
    rep = C.nonexistence_threshold(coeffs, mesh, C.default_ball(coeffs), u0.u)
    lam_bar = C.detect_fold(forward_branch(name)).lam_bar
    assert rep.threshold >= lam_bar
    assert rep.threshold >= rep.gamma
    assert rep.weighted_mass > 0


def test_threshold_rejects_ball_on_c_minus():
    coeffs, mesh, u0 = benchmark("1d-basic")
    with pytest.raises(ValueError):
        C.nonexistence_threshold(coeffs, mesh, Region.ball((0.1,), 0.05), u0.u)


def test_default_ball_avoids_c_minus_and_boundary():
    coeffs, mesh, _ = benchmark("2d-basic")
    ball = C.default_ball(coeffs)
    mask = region_mask(mesh, ball)
    assert not np.any(coeffs.c_minus[mask])
    assert not np.any(mask & mesh.boundary_mask)
