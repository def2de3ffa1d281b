"""Weak Harnack, local maximum principle and Brezis–Cabré type checks.

Every check evaluates both sides of its inequality on a concrete discrete
function and returns an :class:`InequalityReport` with the constant that
makes it tight.  Balls are open and node membership is strict; integrals
use the mesh cell volumes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..mesh import Mesh, Region, boundary_distance, lp_norm, region_mask
from ..solver import _embed, _restrict, interior_operators, p_laplacian_residual
from .report import InequalityReport, lower_report, upper_report
from .samples import SupersolutionSample

_GEOM_TOL = 1e-12


class GeometryError(ValueError):
    """A ball does not fit, or a point is not where it must be."""


class HypothesisError(ValueError):
    """The function handed to a check does not satisfy its hypotheses."""


def _ball_inside(mesh: Mesh, center, radius) -> bool:
    c = np.atleast_1d(np.asarray(center, float))
    return all(ci - radius >= lo - _GEOM_TOL and ci + radius <= hi + _GEOM_TOL
               for ci, lo, hi in zip(c, mesh.lower, mesh.upper))


def _require_inside(mesh, center, radius, what):
    if not _ball_inside(mesh, center, radius):
        raise GeometryError(f"{what} B_{radius:g}({tuple(np.atleast_1d(center))}) "
                            "is not contained in the domain")


def is_boundary_point(mesh: Mesh, x0) -> bool:
    x0 = np.atleast_1d(np.asarray(x0, float))
    if x0.size != mesh.dimension:
        return False
    inside = all(lo - _GEOM_TOL <= xi <= hi + _GEOM_TOL
                 for xi, lo, hi in zip(x0, mesh.lower, mesh.upper))
    on_face = any(abs(xi - lo) <= _GEOM_TOL or abs(xi - hi) <= _GEOM_TOL
                  for xi, lo, hi in zip(x0, mesh.lower, mesh.upper))
    return inside and on_face


def _ball(mesh, center, radius):
    return region_mask(mesh, Region.ball(center, radius))


def _dirichlet_solve(mesh: Mesh, a, rhs) -> np.ndarray:
    """Solve −Δw + a w = rhs with zero boundary data (five-point scheme)."""
    L, _ = interior_operators(mesh)
    a = np.broadcast_to(np.asarray(a, float), mesh.shape)
    A = (L + sp.diags(_restrict(mesh, a))).tocsc()
    return _embed(mesh, spla.spsolve(A, _restrict(mesh, np.asarray(rhs, float))))


def sup_ratio_to_distance(mesh: Mesh, w) -> float:
    """sup over interior nodes of w/d(x, ∂ω)."""
    d = boundary_distance(mesh)
    inner = mesh.interior_mask
    return float(np.max(np.asarray(w)[inner] / d[inner])) if inner.any() else 0.0


def negative_source_correction(mesh: Mesh, a, b) -> tuple[float, np.ndarray]:
    """The term subtracted when the source has a negative part.

    Solves −Δw + a w = b⁻ with zero boundary data; u + w is then a
    supersolution with source b⁺, and sup w/d bounds the loss in the
    boundary inequality.  Returns ``(sup w/d, w)``.
    """
    bneg = np.maximum(-np.asarray(b, float), 0.0)
    if not bneg.any():
        return 0.0, np.zeros(mesh.shape)
    w = _dirichlet_solve(mesh, a, bneg)
    return sup_ratio_to_distance(mesh, w), w


def _params(sample, **kw):
    out = {"p": float(sample.p), "a_inf": float(np.max(np.abs(sample.a)))}
    out.update(kw)
    return out


def interior_weak_harnack(sample: SupersolutionSample, y, R: float, s: float = 1.0,
                          b=None, r: float = 2.0) -> InequalityReport:
    """inf_{B_R(y)} u ≥ C [(∫_{B_2R(y)} u^s)^{1/s} − ‖b⁻‖_{L^r(B_4R(y))}].

    Parameters
    ----------
    sample : SupersolutionSample
    y : array_like
        Ball centre.  B_4R(y) must lie in the domain.
    R, s : float
        Radius and integrability exponent (s > 0).
    b : ndarray, optional
        Source field; only its negative part enters.
    r : float
        Exponent of the source norm.
    """
    mesh = sample.mesh
    if not s > 0:
        raise ValueError("s must be positive")
    _require_inside(mesh, y, 4 * R, "ball")
    u = np.maximum(sample.u, 0.0)
    inner = _ball(mesh, y, R)
    if not inner.any():
        raise GeometryError("B_R(y) contains no nodes; refine the mesh")
    lhs = float(u[inner].min())
    integral = lp_norm(mesh, u, s, _ball(mesh, y, 2 * R))
    penalty = 0.0
    if b is not None:
        penalty = lp_norm(mesh, np.maximum(-np.asarray(b, float), 0.0), r, _ball(mesh, y, 4 * R))
    params = _params(sample, R=float(R), s=float(s), y=tuple(np.atleast_1d(y)))
    return lower_report("interior-weak-harnack", lhs, integral - penalty, params,
                        {"integral": integral, "subtracted": penalty})


def boundary_weak_harnack(sample: SupersolutionSample, x0, R: float, epsilon: float = 0.5,
                          b=None, R_bar: float | None = None) -> InequalityReport:
    """inf_{B_R(x0)∩ω} u/d ≥ C (∫_{B_R(x0)∩ω} (u/d)^ε)^{1/ε} − sup_ω w/d.

    ``u/d`` is evaluated on interior nodes only (d > 0 there).  The
    subtracted term is present only when a source ``b`` with a negative part
    is given; w solves −Δw + a w = b⁻ (p = 2).  It is folded into ``rhs`` so
    that the report reads lhs ≥ C·rhs.

    Raises
    ------
    GeometryError
        If ``x0`` is not on the boundary or ``R`` exceeds ``R_bar``.
    """
    mesh = sample.mesh
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not is_boundary_point(mesh, x0):
        raise GeometryError(f"{tuple(np.atleast_1d(x0))} is not a boundary point")
    if R_bar is not None and R > R_bar:
        raise GeometryError(f"R = {R} exceeds the frame size R_bar = {R_bar}")
    d = boundary_distance(mesh)
    region = _ball(mesh, x0, R) & mesh.interior_mask
    if not region.any():
        raise GeometryError("B_R(x0) contains no interior nodes; refine the mesh")
    ratio = np.zeros(mesh.shape)
    ratio[region] = np.maximum(sample.u[region], 0.0) / d[region]
    lhs = float(ratio[region].min())
    integral = lp_norm(mesh, ratio, epsilon, region)
    subtracted = 0.0
    if b is not None:
        if sample.p != 2:
            raise ValueError("the signed-source correction is implemented for p = 2")
        subtracted, _ = negative_source_correction(mesh, sample.a, b)
    params = _params(sample, R=float(R), epsilon=float(epsilon), x0=tuple(np.atleast_1d(x0)))
    return lower_report("boundary-weak-harnack", lhs, integral - subtracted, params,
                        {"integral": integral, "subtracted": subtracted})


def scan_epsilon(samples, x0, R: float, epsilons=(0.1, 0.25, 0.5, 1.0)) -> list[dict]:
    """Worst-case boundary constant over ``samples`` for each ε.

    Returns one row per ε with keys ``epsilon``, ``min_constant``,
    ``bounded`` (min constant > 0) and ``best`` (True on the largest ε that
    is still bounded away from zero).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("scan_epsilon needs at least one sample")
    eps = [float(e) for e in epsilons]
    if not eps or any(not 0 < e <= 1 for e in eps):
        raise ValueError("epsilon grid must be a nonempty subset of (0, 1]")
    rows = []
    for e in sorted(eps):
        cs = [boundary_weak_harnack(smp, x0, R, e).constant for smp in samples]
        m = float(np.min(cs))
        rows.append({"epsilon": e, "min_constant": m, "bounded": bool(m > 0 and np.isfinite(m))})
    ok = [row["epsilon"] for row in rows if row["bounded"]]
    for row in rows:
        row["best"] = bool(ok) and row["epsilon"] == max(ok)
    return rows


def _check_sign(mesh, res, sign, tol, what):
    inner = res[mesh.interior_mask]
    worst = float(np.max(sign * inner)) if inner.size else 0.0
    if worst > tol:
        raise HypothesisError(f"not {what}: residual off by {worst:.3e}")


def brezis_cabre_check(mesh: Mesh, u, a, f, y, R: float, tol: float = 1e-8) -> InequalityReport:
    """inf_ω u/d ≥ C ∫_{B_R(y)} f for an upper solution of −Δu + a u = f.

    Requires a, f ≥ 0 and B_2R(y) inside the domain.
    """
    u = mesh.check_field(u, "u")
    a = np.broadcast_to(np.asarray(a, float), mesh.shape)
    f = np.broadcast_to(np.asarray(f, float), mesh.shape)
    if np.any(a < 0) or np.any(f < 0):
        raise HypothesisError("a and f must be nonnegative")
    _require_inside(mesh, y, 2 * R, "ball")
    scale = max(1.0, float(np.max(np.abs(f))))
    _check_sign(mesh, p_laplacian_residual(u, 2.0, a, f, mesh=mesh), -1.0, tol * scale,
                "an upper solution")
    d = boundary_distance(mesh)
    inner = mesh.interior_mask
    lhs = float(np.min(u[inner] / d[inner]))
    rhs = lp_norm(mesh, f, 1.0, _ball(mesh, y, R))
    params = {"p": 2.0, "a_inf": float(np.max(a)), "R": float(R), "y": tuple(np.atleast_1d(y))}
    return lower_report("brezis-cabre", lhs, rhs, params, tol=tol)


def local_max_principle_check(mesh: Mesh, u, a, b, center, R: float, s: float = 1.0,
                              r: float = 2.0, boundary: bool = False,
                              tol: float = 1e-8) -> InequalityReport:
    """sup_{inner} u⁺ ≤ C [(∫_{outer} (u⁺)^s)^{1/s} + ‖b⁺‖_{L^r(outer)}].

    Interior form: inner = B_R(center), outer = B_2R(center) ⊂ domain.
    Boundary form (``boundary=True``): ``center`` on ∂ω and both balls are
    cut by the domain.  ``u`` must be a lower solution of −Δu + a u = b,
    checked at the interior nodes.
    """
    u = mesh.check_field(u, "u")
    if not s > 0:
        raise ValueError("s must be positive")
    a = np.broadcast_to(np.asarray(a, float), mesh.shape)
    b = np.broadcast_to(np.asarray(b, float), mesh.shape)
    if boundary:
        if not is_boundary_point(mesh, center):
            raise GeometryError(f"{tuple(np.atleast_1d(center))} is not a boundary point")
    else:
        _require_inside(mesh, center, 2 * R, "ball")
    scale = max(1.0, float(np.max(np.abs(b))))
    _check_sign(mesh, p_laplacian_residual(u, 2.0, a, b, mesh=mesh), 1.0, tol * scale,
                "a lower solution")
    inner, outer = _ball(mesh, center, R), _ball(mesh, center, 2 * R)
    if not inner.any():
        raise GeometryError("inner ball contains no nodes; refine the mesh")
    up = np.maximum(u, 0.0)
    lhs = float(up[inner].max())
    integral = lp_norm(mesh, up, s, outer)
    source = lp_norm(mesh, np.maximum(b, 0.0), r, outer)
    params = {"p": 2.0, "a_inf": float(np.max(np.abs(a))), "R": float(R), "s": float(s),
              "center": tuple(np.atleast_1d(center))}
    name = "boundary-local-max-principle" if boundary else "local-max-principle"
    return upper_report(name, lhs, integral + source, params,
                        {"integral": integral, "source": source})


@dataclass
class ComparisonResult:
    """Outcome of a discrete comparison: u ≤ v expected wherever hypotheses hold."""

    hypotheses_met: bool
    max_excess: float  # max(u − v) over all nodes
    tol: float

    @property
    def verdict(self) -> bool:
        return (not self.hypotheses_met) or self.max_excess <= self.tol


def comparison_check(mesh: Mesh, u, v, p: float, a, tol: float = 1e-8) -> ComparisonResult:
    """Check that a lower function stays below an upper one.

    Hypotheses: u ≤ v on the boundary and −Δ_p u + a|u|^{p−2}u ≤
    −Δ_p v + a|v|^{p−2}v at every interior node (up to ``tol``).
    """
    u, v = mesh.check_field(u, "u"), mesh.check_field(v, "v")
    ru = p_laplacian_residual(u, p, a, 0.0, mesh=mesh)
    rv = p_laplacian_residual(v, p, a, 0.0, mesh=mesh)
    bnd = mesh.boundary_mask
    scale = max(1.0, float(np.max(np.abs(rv))), float(np.max(np.abs(ru))))
    ok = bool(np.all(u[bnd] <= v[bnd] + tol)) and \
        bool(np.all((ru - rv)[mesh.interior_mask] <= tol * scale))
    return ComparisonResult(ok, float(np.max(u - v)), tol * max(1.0, float(np.max(np.abs(v)))))
