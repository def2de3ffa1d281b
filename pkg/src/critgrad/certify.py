"""Empirical certificates for the a priori bounds.

* :func:`check_global_bound`: a uniform bound M on every solution with
  λ ∈ [Λ₁, Λ₂], taken as the branch maximum inflated by 10%.
* :func:`check_omega_plus_reduction`: the two-sided bound of u in terms of
  its values on Ω₊ = {c₊ > 0} and a reference solution ũ.
* :func:`check_local_bounds`: runs the localisation argument around points
  of Ω̄₊: the exponential change of variable, the auxiliary problem for z₂,
  positivity of v₁ and the sign of its differential inequality.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from . import solver as S
from .continuation import Branch, _ball_system, solutions_at
from .mesh import Region, boundary_distance, region_mask

INFLATION = 1.1


class CertificationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# global bound


@dataclass
class BoundCertificate:
    """Bound M on sup u over sampled solutions with λ ∈ [Λ₁, Λ₂].

    ``witnesses`` holds ``(λ, sup u, source)`` rows, where source is
    ``"branch"`` or ``"crossing"``; ``resolved`` records, per witness,
    whether re-solving it from itself converged with sup u ≤ M.
    """

    lambda_interval: tuple
    M: float
    witnesses: list
    resolved: list
    branch_max: float

    @property
    def verdict(self) -> bool:
        return bool(self.resolved) and all(self.resolved) and \
            all(s <= self.M for _, s, _ in self.witnesses)

    def to_text(self) -> str:
        lo, hi = self.lambda_interval
        lines = [f"lambda interval: [{lo!r}, {hi!r}]",
                 f"branch max sup u: {self.branch_max!r}",
                 f"M (branch max x {INFLATION}): {self.M!r}",
                 f"witnesses: {len(self.witnesses)}",
                 f"verdict: {'pass' if self.verdict else 'FAIL'}"]
        return "\n".join(lines) + "\n"


def check_global_bound(branch: Branch, Lambda1: float, Lambda2: float,
                       opts: S.SolverOptions | None = None, rel_cover: float = 1e-3
                       ) -> BoundCertificate:
    """Certificate for sup u on [Λ₁, Λ₂] from a traced branch.

    Witnesses are every branch point with λ in the interval plus the
    re-converged solutions where the branch crosses Λ₁ and Λ₂.  An upper
    end up to ``rel_cover`` beyond the largest branch λ (a refined fold
    value) counts as covered.

    Raises
    ------
    CertificationError
        If 0 < Λ₁ < Λ₂ fails or the branch does not cover the interval.
    """
    if not 0 < Lambda1 < Lambda2:
        raise CertificationError(f"need 0 < Lambda1 < Lambda2, got [{Lambda1}, {Lambda2}]")
    lams = branch.lambdas
    lo, hi = float(lams.min()), float(lams.max())
    if Lambda1 > hi or Lambda2 < lo:
        raise CertificationError(f"[{Lambda1}, {Lambda2}] does not meet the branch range [{lo}, {hi}]")
    if Lambda1 < lo or Lambda2 > hi + rel_cover * abs(hi):
        raise CertificationError(f"branch range [{lo}, {hi}] does not cover [{Lambda1}, {Lambda2}]")
    opts = opts or S.SolverOptions(variable=branch.variable)
    witnesses, guesses = [], []
    for pt in branch.points:
        if Lambda1 <= pt.lam <= Lambda2:
            witnesses.append((float(pt.lam), float(pt.sup_norm), "branch"))
            guesses.append(pt.u)
    for lam in (Lambda1, min(Lambda2, hi)):
        for sol in solutions_at(branch, lam, opts):
            witnesses.append((float(lam), float(sol.sup_norm), "crossing"))
            guesses.append(sol.u)
    if not witnesses:
        raise CertificationError("no branch point inside the interval")
    branch_max = max(s for _, s, _ in witnesses)
    M = INFLATION * branch_max
    resolved = []
    for (lam, _, _), u in zip(witnesses, guesses):
        try:
            sol = S.newton_solve(u, lam, branch.coeffs, opts)
            resolved.append(bool(np.max(sol.u) <= M))
        except S.SolverError:
            resolved.append(False)
    return BoundCertificate((float(Lambda1), float(Lambda2)), M, witnesses, resolved, branch_max)


# ---------------------------------------------------------------------------
# reduction to Ω₊


@dataclass
class ReductionReport:
    """−sup_{Ω₊} u⁻ − M ≤ u ≤ sup_{Ω₊} u⁺ + M with M = 2‖ũ‖∞."""

    M: float
    upper_slack: float  # min of (sup u⁺ + M − u) over nodes
    lower_slack: float  # min of (u + sup u⁻ + M) over nodes
    tol: float

    @property
    def verdict(self) -> bool:
        return self.upper_slack >= -self.tol and self.lower_slack >= -self.tol


def check_omega_plus_reduction(u, reference, coeffs, tol: float = 1e-8) -> ReductionReport:
    """Check both reduction inequalities nodewise.

    Parameters
    ----------
    u, reference : Solution or ndarray
        A solution and a reference solution ũ (any λ) on the same mesh.
    """
    mesh = coeffs.mesh
    u = mesh.check_field(getattr(u, "u", u), "u")
    ref = mesh.check_field(getattr(reference, "u", reference), "reference")
    omega = coeffs.c_plus > 0
    if not omega.any():
        raise CertificationError("Omega_+ is empty")
    M = 2.0 * float(np.max(np.abs(ref)))
    top = float(np.max(np.maximum(u[omega], 0.0)))
    bottom = float(np.max(np.maximum(-u[omega], 0.0)))
    return ReductionReport(M, float(np.min(top + M - u)), float(np.min(u + bottom + M)),
                           tol * max(1.0, float(np.max(np.abs(u)))))


# ---------------------------------------------------------------------------
# local bounds


@dataclass
class LocalBoundReport:
    """One localisation at x̄.

    ``kind`` is ``"interior"`` (ball B_4R(x̄) ⊂ Ω as working region) or
    ``"boundary"`` (B_ε(x̄) ∩ Ω).  ``residual_min`` is the smallest value of
    −Δv₁ + μ₁h⁻v₁ − Λ₁c₊(1 + μ₁w₁)g₁(w₁)⁺ over the working region and
    ``identity_mismatch`` the largest discrete defect of the transformed
    equation there.  That defect plus ``rounding_floor`` (64 eps times the
    size of the discrete Laplacian of v₁) is the tolerance of the sign check.
    """

    x_bar: tuple
    kind: str
    R: float
    z2_min: float
    z2_max: float
    v1_min: float
    residual_min: float
    identity_mismatch: float
    sup_u: float
    M: float | None
    rounding_floor: float = 0.0

    @property
    def z2_nonpositive(self) -> bool:
        return self.z2_max <= 1e-12 * max(1.0, abs(self.z2_min))

    @property
    def residual_ok(self) -> bool:
        return self.residual_min >= -(self.identity_mismatch + self.rounding_floor)

    @property
    def within_bound(self) -> bool:
        return self.M is None or self.sup_u <= self.M

    @property
    def verdict(self) -> bool:
        return self.z2_nonpositive and self.v1_min > 0 and self.residual_ok and self.within_bound


def sample_points(coeffs, max_per_axis: int = 10) -> np.ndarray:
    """Nodes of the discrete Ω̄₊ used as centres x̄.

    All of them in 1D; in 2D an evenly spaced subsample of at most
    ``max_per_axis**2`` nodes.
    """
    mesh = coeffs.mesh
    idx = np.flatnonzero(coeffs.c_plus.ravel() > 0)
    if mesh.dimension > 1 and idx.size > max_per_axis ** 2:
        pick = np.unique(np.linspace(0, idx.size - 1, max_per_axis ** 2).round().astype(int))
        idx = idx[pick]
    return mesh.node_coordinates[idx]


def _identity_defect(u, w1, lam, coeffs, mu1):
    """−Δ_h w₁ minus the right-hand side of the transformed equation."""
    mesh = coeffs.mesh
    e = np.exp(mu1 * u)
    rhs = e * ((lam * coeffs.c_plus - coeffs.c_minus) * u + coeffs.h) \
        + e * kernels.grad_sq(u, mesh.spacing) * (coeffs.mu - mu1)
    return kernels.neg_laplacian(w1, mesh.spacing) - rhs


def _working_region(coeffs, x_bar):
    mesh = coeffs.mesh
    eps = coeffs.buffer_epsilon
    dist = min(min(x - lo, hi - x) for x, lo, hi in zip(x_bar, mesh.lower, mesh.upper))
    if dist >= eps:
        R = eps / 4.0
        work = region_mask(mesh, Region.ball(x_bar, 4 * R))
        inner = region_mask(mesh, Region.ball(x_bar, R))
        kind = "interior"
    else:
        R = eps / 2.0
        work = region_mask(mesh, Region.ball(x_bar, eps)) & mesh.interior_mask
        inner = region_mask(mesh, Region.ball(x_bar, R))
        kind = "boundary"
    bad = work & ((coeffs.mu < coeffs.mu1) | (coeffs.c_minus != 0))
    if bad.any():
        raise CertificationError(
            f"collar conditions fail near x_bar={tuple(x_bar)} at {int(bad.sum())} nodes")
    if not (inner & mesh.interior_mask).any():
        raise CertificationError(f"no interior node within R={R} of x_bar={tuple(x_bar)}")
    return kind, R, work, inner


def local_bound_at(u, lam: float, coeffs, x_bar, Lambda1: float, Lambda2: float,
                   M: float | None = None) -> LocalBoundReport:
    """Run the localisation pipeline at one centre ``x_bar``.

    Raises
    ------
    CertificationError
        If λ ∉ [Λ₁, Λ₂] or the collar conditions are unavailable at x̄.
    """
    if not 0 < Lambda1 <= lam <= Lambda2:
        raise CertificationError(f"lambda={lam} outside [{Lambda1}, {Lambda2}]")
    mesh = coeffs.mesh
    mu1 = coeffs.mu1
    x_bar = tuple(float(v) for v in np.atleast_1d(x_bar))
    kind, R, work, inner = _working_region(coeffs, x_bar)
    w1 = S.cole_hopf_forward(u, mu1)
    hminus = np.maximum(-coeffs.h, 0.0)
    # −Δz₂ + μ₁h⁻z₂ = −Λ₂c₊e⁻¹/μ₁ on the working region, z₂ = 0 outside
    A, idx, _ = _ball_system(mesh, work & mesh.interior_mask)
    A = (A + sp.diags(mu1 * hminus.ravel()[idx])).tocsc()
    rhs = -Lambda2 * coeffs.c_plus.ravel()[idx] * np.exp(-1.0) / mu1
    z2 = np.zeros(mesh.size)
    z2[idx] = spla.spsolve(A, rhs)
    z2 = z2.reshape(mesh.shape)
    v1 = w1 - z2 + 1.0 / mu1
    e = 1.0 + mu1 * w1
    g = np.log(e) / mu1
    res = kernels.neg_laplacian(v1, mesh.spacing) + mu1 * hminus * v1 \
        - Lambda1 * coeffs.c_plus * np.maximum(e * g, 0.0)
    check = work & mesh.interior_mask
    defect = _identity_defect(u, w1, lam, coeffs, mu1)
    lap_norm = sum(4.0 / h ** 2 for h in mesh.spacing)
    floor = 64 * np.finfo(float).eps * lap_norm * float(np.max(np.abs(v1[work])))
    return LocalBoundReport(
        x_bar, kind, R, float(z2[check].min()), float(z2[check].max()),
        float(v1[work].min()), float(res[check].min()), float(np.max(np.abs(defect[check]))),
        float(u[inner].max()), M, floor)


def check_local_bounds(u, lam: float, coeffs, Lambda1: float, Lambda2: float,
                       M: float | None = None, points=None) -> list:
    """:func:`local_bound_at` over the sampled centres (default :func:`sample_points`)."""
    u = coeffs.mesh.check_field(getattr(u, "u", u), "u")
    pts = sample_points(coeffs) if points is None else np.atleast_2d(points)
    return [local_bound_at(u, lam, coeffs, x, Lambda1, Lambda2, M) for x in pts]


def witness_csv(cert: BoundCertificate) -> str:
    buf = io.StringIO()
    buf.write("lambda,sup_u,source,resolved_ok\n")
    for (lam, s, src), ok in zip(cert.witnesses, cert.resolved):
        buf.write(f"{lam:.17g},{s:.17g},{src},{int(ok)}\n")
    return buf.getvalue()
