"""Growth lemma, its barrier, the distribution decay of u/x_N and the
interior scaling test on cube frames.

All checks run on the frames of :mod:`critgrad.harnack.frames`, where the
bottom face sits on x_N = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mesh import Mesh, measure
from ..solver import p_laplacian_residual
from .frames import cube_mask, frame_bounds, vertical
from .report import InequalityReport, lower_report


def cap_function(x_tangential, c1: float) -> np.ndarray:
    """Smooth cap η: 0 on |x'| ≤ ½, rising to c₁/2 at |x'| = (3 − 2c₁)/4.

    The rise is the quintic smoothstep 6t⁵ − 15t⁴ + 10t³, so η is C² with
    vanishing first and second derivatives at both ends.  Constant c₁/2
    beyond the outer radius.
    """
    outer = (3.0 - 2.0 * c1) / 4.0
    t = np.clip((np.abs(x_tangential) - 0.5) / (outer - 0.5), 0.0, 1.0)
    return 0.5 * c1 * t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass
class Barrier:
    """The barrier v_δ on a mesh, the slab mask ω_δ and the subsolution verdict."""

    v: np.ndarray
    mask: np.ndarray
    eta: np.ndarray
    max_residual: float  # max over interior nodes of ω_δ of −Δ_p v + a|v|^{p−2}v

    @property
    def is_subsolution(self) -> bool:
        return self.max_residual <= 0.0


def barrier(delta: float, c1: float, mesh: Mesh, p: float = 2.0, a=0.0) -> Barrier:
    """v_δ = (x_N − η)²/δ + (x_N − η) on ω_δ = {η ≤ x_N ≤ δ/2}.

    In 1D η ≡ 0.  The residual is evaluated with the closed form at every
    stencil neighbour, so nodes next to ∂ω_δ are checked as well.

    Raises
    ------
    ValueError
        Unless 0 < δ ≤ c₁ < ½.
    """
    if not (0 < delta <= c1 < 0.5):
        raise ValueError(f"need 0 < delta <= c1 < 1/2, got delta={delta}, c1={c1}")
    xn = vertical(mesh)
    eta = np.zeros(mesh.shape) if mesh.dimension == 1 else cap_function(mesh.grids[0], c1)
    s = xn - eta
    v = s * s / delta + s
    tol = 1e-12
    mask = (s >= -tol) & (xn <= delta / 2 + tol)
    res = p_laplacian_residual(v, p, a, 0.0, mesh=mesh)
    check = mask & mesh.interior_mask
    worst = float(res[check].max()) if check.any() else -np.inf
    return Barrier(v, mask, eta, worst)


def barrier_mesh(delta: float, c1: float, n: int, dim: int = 2) -> Mesh:
    """Mesh covering the slab: x' ∈ [−(3−2c₁)/4, (3−2c₁)/4], x_N ∈ [0, δ/2]."""
    from ..mesh import build_interval_mesh, build_rectangle_mesh
    if dim == 1:
        return build_interval_mesh(0.0, delta / 2.0, n)
    half = (3.0 - 2.0 * c1) / 4.0
    ny = max(3, int(round((n - 1) * (delta / 2.0) / (2 * half))) + 1)
    return build_rectangle_mesh(((-half, 0.0), (half, delta / 2.0)), n, ny)


def _ratio_on_q1(mesh: Mesh, u):
    q1 = cube_mask(mesh, 1.0) & (vertical(mesh) > 0)
    return q1, np.where(q1, np.asarray(u, float) / np.where(q1, vertical(mesh), 1.0), np.inf)


def growth_lemma_check(mesh: Mesh, u, nu: float, p: float = 2.0, a=0.0) -> InequalityReport:
    """inf_{Q₁} u/x_N for a supersolution u on the Q_{3/2} frame.

    The hypothesis |{u > x_N} ∩ Q₁| ≥ ν is checked with cell volumes; when
    it fails the report status is ``"hypothesis-not-met"``.  Otherwise the
    reported k = inf u/x_N must be positive.
    """
    u = mesh.check_field(u, "u")
    q1, ratio = _ratio_on_q1(mesh, u)
    if not q1.any():
        raise ValueError("Q_1 contains no nodes; the mesh is not a Q_{3/2} frame")
    k = float(ratio[q1].min())
    big = measure(mesh, q1 & (u > vertical(mesh)))
    params = {"nu": float(nu), "p": float(p), "a_inf": float(np.max(np.abs(a)))}
    rep = lower_report("growth-lemma", k, 1.0, params, {"measure": big})
    if big < nu:
        rep.status = "hypothesis-not-met"
    return rep


@dataclass
class DecayTable:
    M: float
    mu: float
    rows: list  # (j, measure, bound, ok)
    normalizer: float

    @property
    def verdict(self) -> bool:
        return all(ok for *_, ok in self.rows)

    @property
    def worst_ratio(self) -> float:
        """max_j measure_j / bound_j (< 1 on pass)."""
        return max(m / b for _, m, b, _ in self.rows)


def distribution_decay_check(mesh: Mesh, u, M: float = 4.0, mu: float = 0.05,
                             J: int = 4) -> DecayTable:
    """Measures |{x ∈ Q₁ : u/x_N > M^j}| against (1 − μ)^j, j = 1..J.

    ``u`` lives on the Q₄ frame.  It is first divided by inf_{Q₁} u/x_N
    when that infimum is positive (the boundary case of the normalisation
    inf ≤ 1); otherwise it is used as is.
    """
    u = mesh.check_field(u, "u")
    q1, ratio = _ratio_on_q1(mesh, u)
    inf = float(ratio[q1].min())
    norm = inf if inf > 0 else 1.0
    ratio = ratio / norm
    rows = []
    for j in range(1, J + 1):
        m = measure(mesh, q1 & (ratio > M ** j))
        bound = (1.0 - mu) ** j
        rows.append((j, m, bound, m < bound))
    return DecayTable(float(M), float(mu), rows, norm)


def calibrate_decay(fields, M_grid=(2.0, 4.0, 8.0), mu_grid=(0.01, 0.02, 0.05, 0.1, 0.2), J=4):
    """Smallest M in the grid admitting the largest μ with every field passing.

    ``fields`` is a list of ``(mesh, u)`` pairs on Q₄ frames.  Returns
    ``(M, mu)`` or ``None`` when no pair works.
    """
    for M in sorted(M_grid):
        ok = [mu for mu in sorted(mu_grid)
              if all(distribution_decay_check(m, u, M, mu, J).verdict for m, u in fields)]
        if ok:
            return float(M), float(max(ok))
    return None


def interior_harnack_scaling(func, rhos=(1.0, 0.5, 0.25), gamma: float = 1.0, n: int = 65,
                             dim: int = 2) -> dict:
    """Scaled interior ratio for u_ρ(y) = u(ρy′, ρ(y_N − ½) + ½) on Q₁(e).

    For each ρ the function is sampled on a fixed mesh of Q₁(e) and the
    product inf v / (∫_{Q₁(e)} v^γ)^{1/γ} is returned; it equals
    ρ^{N/γ}·inf_{Q_ρ}u / (∫_{Q_ρ} u^γ)^{1/γ}.  Returns ``{rho: product}``.
    """
    from .frames import frame_mesh
    mesh = frame_mesh(1.0, n, dim)
    inside = cube_mask(mesh, 1.0)
    out = {}
    for rho in rhos:
        yN = rho * (vertical(mesh) - 0.5) + 0.5
        v = func(rho * mesh.grids[0], yN) if dim == 2 else func(yN)
        v = np.asarray(v, float)
        mean = float(np.sum(v[inside] ** gamma * mesh.cell_volume[inside])) ** (1.0 / gamma)
        out[float(rho)] = float(v[inside].min()) / mean
    return out


__all__ = ["Barrier", "DecayTable", "barrier", "barrier_mesh", "cap_function", "calibrate_decay",
           "distribution_decay_check", "frame_bounds", "growth_lemma_check",
           "interior_harnack_scaling"]
