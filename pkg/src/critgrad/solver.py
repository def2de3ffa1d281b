"""Finite-difference discretisation and Newton solver.

The discrete problem at interior nodes is

    F(u) = -Δ_h u - (λc₊ - c₋) u - μ |∇_h u|² - h = 0,

with the 3/5-point Laplacian and centred gradients; boundary values are
held at zero.  Every interior node of a box mesh has both neighbours on
each axis, so centred differences are available everywhere they are needed.

In ``"cole-hopf"`` mode Newton iterates on w = (e^{μ₂u} - 1)/μ₂, which
satisfies

    -Δ_h w - (1 + μ₂w)[(λc₊ - c₋) g(w) + h] - (μ - μ₂)|∇_h w|²/(1 + μ₂w) = 0,

with g(w) = log(1 + μ₂w)/μ₂, and is mapped back at the end.  The quadratic
gradient term vanishes wherever μ = μ₂, which keeps large solutions tame.
"""
from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import optimize

from . import kernels
from .mesh import Mesh

log = logging.getLogger(__name__)

VARIABLES = ("direct-u", "cole-hopf")

# Residuals are sums of terms of size ~scale; below ~eps*scale a residual
# cannot be reduced further, so the Newton stopping test uses this floor.
_ROUNDING_FACTOR = 64.0
# Width of the C¹ ramp that replaces (·)⁺ in the modified problem.
RAMP_WIDTH = 1e-6


class SolverError(RuntimeError):
    """Base class for Newton failures."""


class DivergenceError(SolverError):
    pass


class LineSearchError(SolverError):
    pass


class TransformDomainError(SolverError):
    """1 + μw ≤ 0 at some node; ``nodes`` lists them (flat indices)."""

    def __init__(self, msg, nodes=()):
        super().__init__(msg)
        self.nodes = np.asarray(nodes, dtype=np.int64)


class OrderingError(SolverError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    newton_tol: float = 1e-10
    max_iter: int = 50
    damping: float = 0.5
    variable: str = "direct-u"
    armijo: float = 1e-4
    min_step: float = 1e-10

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.variable not in VARIABLES:
            raise ValueError(f"variable must be one of {VARIABLES}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class Solution:
    """Converged discrete solution.

    ``residual_norm`` is the sup-norm residual of the system Newton actually
    solved (in ``variable``); ``tolerance`` is the threshold it met, which
    is ``newton_tol`` unless the rounding floor of large solutions is higher.
    """

    u: np.ndarray
    lam: float
    residual_norm: float
    newton_iterations: int
    jacobian_signature: int
    variable: str = "direct-u"
    tolerance: float = 1e-10
    history: list = field(default_factory=list, repr=False)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.u)))


# ---------------------------------------------------------------------------
# sparse operators on the interior block

_OPERATORS = weakref.WeakKeyDictionary()


def _tridiag(n, lo, di, up):
    return sp.diags([np.full(n - 1, lo), np.full(n, di), np.full(n - 1, up)], [-1, 0, 1], format="csr")


def interior_operators(mesh: Mesh):
    """``(L, (Dx[, Dy]))``: interior-block −Δ_h and centred differences.

    Rows/columns follow C order of ``mesh.interior_shape``; boundary
    contributions are dropped since boundary values are zero.
    """
    ops = _OPERATORS.get(mesh)
    if ops is not None:
        return ops
    shape = mesh.interior_shape
    lap1 = [_tridiag(n, -1.0, 2.0, -1.0) / h**2 for n, h in zip(shape, mesh.spacing)]
    dif1 = [_tridiag(n, -0.5, 0.0, 0.5) / h for n, h in zip(shape, mesh.spacing)]
    if mesh.dimension == 1:
        ops = (lap1[0].tocsr(), (dif1[0].tocsr(),))
    else:
        ix, iy = sp.identity(shape[0], format="csr"), sp.identity(shape[1], format="csr")
        L = sp.kron(lap1[0], iy) + sp.kron(ix, lap1[1])
        ops = (L.tocsr(), (sp.kron(dif1[0], iy).tocsr(), sp.kron(ix, dif1[1]).tocsr()))
    _OPERATORS[mesh] = ops
    return ops


def _embed(mesh: Mesh, interior_values) -> np.ndarray:
    full = np.zeros(mesh.shape)
    full[(slice(1, -1),) * mesh.dimension] = np.asarray(interior_values).reshape(mesh.interior_shape)
    return full


def _restrict(mesh: Mesh, field_values) -> np.ndarray:
    return np.asarray(field_values)[(slice(1, -1),) * mesh.dimension].ravel()


def _interior_sl(mesh):
    return (slice(1, -1),) * mesh.dimension


# ---------------------------------------------------------------------------
# residuals and Jacobians


def residual(u, lam: float, coeffs) -> np.ndarray:
    """Nodal residual of the discrete problem; zero at boundary nodes.

    Parameters
    ----------
    u : ndarray of shape ``coeffs.mesh.shape``
    lam : float
    coeffs : CoefficientSet

    Returns
    -------
    ndarray
        −Δ_h u − (λc₊ − c₋)u − μ|∇_h u|² − h at interior nodes.
    """
    mesh = coeffs.mesh
    u = mesh.check_field(u, "u")
    r = kernels.residual_direct(u, coeffs.reaction(lam), coeffs.mu, coeffs.h, mesh.spacing)
    r[mesh.boundary_mask] = 0.0
    return r


def jacobian(u, lam: float, coeffs) -> sp.csr_matrix:
    """Derivative of :func:`residual` with respect to the interior values.

    Returns the interior×interior block
    −Δ_h − diag(λc₊ − c₋) − 2 Σ_k diag(μ ∂_k u) D_k.
    """
    mesh = coeffs.mesh
    u = mesh.check_field(u, "u")
    L, D = interior_operators(mesh)
    sl = _interior_sl(mesh)
    m = coeffs.reaction(lam)[sl].ravel()
    mu = coeffs.mu[sl].ravel()
    J = L - sp.diags(m)
    for g, Dk in zip(kernels.centered_gradient(u, mesh.spacing), D):
        J = J - sp.diags(2.0 * mu * g[sl].ravel()) @ Dk
    return J.tocsr()


def residual_colehopf(w, lam: float, coeffs) -> np.ndarray:
    """Residual of the transformed equation in w = (e^{μ₂u} − 1)/μ₂.

    Nodes with 1 + μ₂w ≤ 0 get ``nan``; boundary entries are zero.
    """
    mesh = coeffs.mesh
    w = np.asarray(w, float).reshape(mesh.shape)
    r = kernels.residual_colehopf(w, coeffs.reaction(lam), coeffs.mu, coeffs.h, coeffs.mu2,
                                  mesh.spacing)
    r[mesh.boundary_mask] = 0.0
    return r


def jacobian_colehopf(w, lam: float, coeffs) -> sp.csr_matrix:
    mesh = coeffs.mesh
    w = np.asarray(w, float).reshape(mesh.shape)
    mu2 = coeffs.mu2
    L, D = interior_operators(mesh)
    sl = _interior_sl(mesh)
    m = coeffs.reaction(lam)[sl].ravel()
    h = coeffs.h[sl].ravel()
    dmu = (coeffs.mu - mu2)[sl].ravel()
    e = 1.0 + mu2 * w[sl].ravel()
    grads = [g[sl].ravel() for g in kernels.centered_gradient(w, mesh.spacing)]
    g2 = sum(g * g for g in grads)
    diag = m * (np.log(e) + 1.0) + mu2 * h - dmu * mu2 * g2 / e**2
    J = L - sp.diags(diag)
    for g, Dk in zip(grads, D):
        J = J - sp.diags(2.0 * dmu * g / e) @ Dk
    return J.tocsr()


def smooth_ramp(s, width: float = RAMP_WIDTH):
    """C¹ replacement for s⁺, exact outside (−width/2, width/2).

    Returns ``(value, derivative)``.
    """
    s = np.asarray(s, float)
    a = 0.5 * width
    val = np.where(s >= a, s, np.where(s <= -a, 0.0, (s + a) ** 2 / (2.0 * width)))
    der = np.where(s >= a, 1.0, np.where(s <= -a, 0.0, (s + a) / width))
    return val, der


def modified_residual(u, lam: float, coeffs, reference) -> np.ndarray:
    """Residual of −Δu + u = (λc₊ − c₋ + 1)(ρ(u − u₀) + u₀) + μ|∇u|² + h.

    ``reference`` is u₀ and ρ the smoothed positive part.  A solution with
    u ≥ u₀ + width/2 solves the original problem as well.
    """
    mesh = coeffs.mesh
    u = mesh.check_field(u, "u")
    ramp, _ = smooth_ramp(u - reference)
    q = coeffs.reaction(lam) + 1.0
    r = (kernels.neg_laplacian(u, mesh.spacing) + u - q * (ramp + reference)
         - coeffs.mu * kernels.grad_sq(u, mesh.spacing) - coeffs.h)
    r[mesh.boundary_mask] = 0.0
    return r


def modified_jacobian(u, lam: float, coeffs, reference) -> sp.csr_matrix:
    mesh = coeffs.mesh
    L, D = interior_operators(mesh)
    sl = _interior_sl(mesh)
    _, dramp = smooth_ramp(u - reference)
    q = (coeffs.reaction(lam) + 1.0)[sl].ravel()
    mu = coeffs.mu[sl].ravel()
    J = L + sp.diags(1.0 - q * dramp[sl].ravel())
    for g, Dk in zip(kernels.centered_gradient(u, mesh.spacing), D):
        J = J - sp.diags(2.0 * mu * g[sl].ravel()) @ Dk
    return J.tocsr()


def _residual_scale(x, lam, coeffs, variable):
    """Magnitude of the individual terms summed in the residual."""
    mesh = coeffs.mesh
    lap = np.abs(x).max() * 4.0 * sum(1.0 / h**2 for h in mesh.spacing)
    if variable == "cole-hopf":
        with np.errstate(all="ignore"):
            e = 1.0 + coeffs.mu2 * x
            zero = np.abs(e * (coeffs.reaction(lam) * np.log(np.maximum(e, 1e-300)) / coeffs.mu2
                               + coeffs.h))
        return float(max(lap, np.nanmax(zero)))
    zero = np.abs(coeffs.reaction(lam) * x) + np.abs(coeffs.h)
    grad = np.abs(coeffs.mu) * kernels.grad_sq(x, mesh.spacing)
    return float(max(lap, zero.max(), grad.max()))


def effective_tolerance(x, lam, coeffs, opts: SolverOptions) -> float:
    """``newton_tol`` raised to the rounding floor of the state ``x``."""
    floor = _ROUNDING_FACTOR * np.finfo(float).eps * _residual_scale(x, lam, coeffs, opts.variable)
    return max(opts.newton_tol, floor)


# ---------------------------------------------------------------------------
# Cole–Hopf transform


def cole_hopf_forward(u, mu_i: float) -> np.ndarray:
    """w = (e^{μᵢu} − 1)/μᵢ nodewise.

    Raises
    ------
    OverflowError
        If μᵢu exceeds 700 at some node.
    """
    if not mu_i > 0:
        raise ValueError("mu_i must be positive")
    u = np.asarray(u, float)
    t = mu_i * u
    if np.any(t > 700.0):
        raise OverflowError(f"mu_i*u reaches {t.max():.4g} > 700; exp would overflow")
    return np.expm1(t) / mu_i


def cole_hopf_inverse(w, mu_i: float) -> np.ndarray:
    """u = log(1 + μᵢw)/μᵢ nodewise; requires 1 + μᵢw > 0 everywhere."""
    if not mu_i > 0:
        raise ValueError("mu_i must be positive")
    w = np.asarray(w, float)
    t = mu_i * w
    bad = np.flatnonzero(~(t > -1.0))
    if bad.size:
        raise TransformDomainError(
            f"1 + mu*w <= 0 at {bad.size} node(s), first {bad[:5].tolist()}", bad)
    return np.log1p(t) / mu_i


# ---------------------------------------------------------------------------
# Newton


def _perm_parity(perm) -> int:
    perm = np.asarray(perm)
    seen = np.zeros(perm.size, bool)
    parity = 0
    for i in range(perm.size):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return -1 if parity else 1


def determinant_sign(lu) -> int:
    """Sign of det(A) from a ``scipy.sparse.linalg.splu`` factorisation."""
    d = lu.U.diagonal()
    if np.any(d == 0):
        return 0
    s = -1 if np.count_nonzero(d < 0) % 2 else 1
    return s * _perm_parity(lu.perm_r) * _perm_parity(lu.perm_c)


def jacobian_signature(J) -> int:
    return determinant_sign(spla.splu(sp.csc_matrix(J)))


class _System:
    """Residual/Jacobian pair on interior vectors for one solver mode."""

    def __init__(self, lam, coeffs, variable, reference=None):
        self.lam, self.coeffs, self.variable, self.reference = lam, coeffs, variable, reference
        self.mesh = coeffs.mesh
        if reference is not None and variable != "direct-u":
            raise ValueError("the modified problem is only available in direct-u mode")

    def to_state(self, u_full):
        if self.variable == "cole-hopf":
            return _restrict(self.mesh, cole_hopf_forward(u_full, self.coeffs.mu2))
        return _restrict(self.mesh, u_full)

    def to_field(self, x):
        full = _embed(self.mesh, x)
        if self.variable == "cole-hopf":
            return cole_hopf_inverse(full, self.coeffs.mu2)
        return full

    def admissible(self, x):
        if self.variable == "cole-hopf":
            return bool(np.all(1.0 + self.coeffs.mu2 * x > 0))
        return True

    def F(self, x):
        full = _embed(self.mesh, x)
        if self.variable == "cole-hopf":
            r = residual_colehopf(full, self.lam, self.coeffs)
        elif self.reference is not None:
            r = modified_residual(full, self.lam, self.coeffs, self.reference)
        else:
            r = residual(full, self.lam, self.coeffs)
        return _restrict(self.mesh, r)

    def J(self, x):
        full = _embed(self.mesh, x)
        if self.variable == "cole-hopf":
            return jacobian_colehopf(full, self.lam, self.coeffs)
        if self.reference is not None:
            return modified_jacobian(full, self.lam, self.coeffs, self.reference)
        return jacobian(full, self.lam, self.coeffs)

    def tolerance(self, x, opts):
        return effective_tolerance(_embed(self.mesh, x), self.lam, self.coeffs, opts)


def _newton(system: _System, x, opts: SolverOptions, project=None):
    """Damped Newton on interior vectors; returns ``(x, res, iters, sign, hist)``."""
    if not system.admissible(x):
        raise TransformDomainError("initial state outside the transform domain",
                                   np.flatnonzero(1.0 + system.coeffs.mu2 * x <= 0))
    F = system.F(x)
    nrm = float(np.max(np.abs(F))) if F.size else 0.0
    history = [nrm]
    for it in range(opts.max_iter + 1):
        tol = system.tolerance(x, opts)
        if nrm <= tol:
            lu = spla.splu(system.J(x).tocsc())
            return x, nrm, it, determinant_sign(lu), history, tol
        if it == opts.max_iter:
            break
        if not np.isfinite(nrm):
            raise DivergenceError("residual became non-finite")
        try:
            lu = spla.splu(system.J(x).tocsc())
        except RuntimeError as exc:  # exactly singular
            raise DivergenceError(f"singular Jacobian at iteration {it}: {exc}") from None
        dx = lu.solve(-F)
        t = 1.0
        while True:
            x_new = x + t * dx
            if project is not None:
                x_new = project(x_new)
            if system.admissible(x_new):
                F_new = system.F(x_new)
                nrm_new = float(np.max(np.abs(F_new)))
                if np.isfinite(nrm_new) and nrm_new <= (1.0 - opts.armijo * t) * nrm:
                    break
            t *= opts.damping
            if t < opts.min_step:
                if not system.admissible(x + opts.min_step * dx):
                    raise TransformDomainError(
                        f"Newton step leaves the transform domain (lambda={system.lam:g})",
                        np.flatnonzero(1.0 + system.coeffs.mu2 * (x + opts.min_step * dx) <= 0))
                raise LineSearchError(
                    f"line search failed at iteration {it} (residual {nrm:.3e}, lambda={system.lam:g})")
        x, F, nrm = x_new, F_new, nrm_new
        history.append(nrm)
        log.debug("newton it=%d step=%.3g residual=%.3e", it + 1, t, nrm)
    raise DivergenceError(
        f"no convergence in {opts.max_iter} iterations (residual {nrm:.3e}, lambda={system.lam:g})")


def newton_solve(u0, lam: float, coeffs, opts: SolverOptions | None = None,
                 reference=None) -> Solution:
    """Damped Newton solve of the discrete problem from ``u0``.

    Parameters
    ----------
    u0 : ndarray
        Initial guess on the full mesh (boundary values are ignored).
    lam : float
    coeffs : CoefficientSet
    opts : SolverOptions, optional
    reference : ndarray, optional
        If given, solve the modified problem that substitutes
        ρ(u − reference) + reference for u (see :func:`modified_residual`).

    Raises
    ------
    DivergenceError, LineSearchError, TransformDomainError
    """
    opts = SolverOptions() if opts is None else opts
    mesh = coeffs.mesh
    u0 = mesh.check_field(u0, "u0")
    if reference is not None:
        reference = mesh.check_field(reference, "reference")
    system = _System(float(lam), coeffs, opts.variable, reference)
    x, res, iters, sign, hist, tol = _newton(system, system.to_state(u0), opts)
    return Solution(u=system.to_field(x), lam=float(lam), residual_norm=res,
                    newton_iterations=iters, jacobian_signature=sign,
                    variable=opts.variable, tolerance=tol, history=hist)


# ---------------------------------------------------------------------------
# lower/upper solutions and monotone iteration


@dataclass
class SolutionCheck:
    """Outcome of a discrete lower/upper solution test."""

    kind: str
    verdict: bool
    interior_violations: np.ndarray
    boundary_violations: np.ndarray
    worst: float  # largest violation amount (0 when passing)

    def __bool__(self):
        return self.verdict


def _check(alpha, lam, coeffs, tol, sign, kind, variable):
    mesh = coeffs.mesh
    a = mesh.check_field(alpha, kind)
    if variable == "cole-hopf":
        w = cole_hopf_forward(a, coeffs.mu2)
        r = kernels.residual_colehopf(w, coeffs.reaction(lam), coeffs.mu, coeffs.h, coeffs.mu2,
                                      mesh.spacing)
    else:
        r = kernels.residual_direct(a, coeffs.reaction(lam), coeffs.mu, coeffs.h, mesh.spacing)
    r = sign * r
    bad_int = mesh.interior_mask & (r > tol)
    bad_bnd = mesh.boundary_mask & (sign * a > 0)
    worst = max(float(np.max(r[mesh.interior_mask], initial=0.0)) if bad_int.any() else 0.0,
                float(np.max(sign * a[mesh.boundary_mask])) if bad_bnd.any() else 0.0)
    return SolutionCheck(kind, not (bad_int.any() or bad_bnd.any()), np.flatnonzero(bad_int),
                         np.flatnonzero(bad_bnd), worst)


def check_lower_solution(alpha, lam: float, coeffs, tol: float = 1e-8,
                         variable: str = "direct-u") -> SolutionCheck:
    """Residual ≤ tol at interior nodes and alpha ≤ 0 on the boundary.

    Testing the weak inequality against nonnegative nodal hat functions
    reduces it to the sign of the nodal residual.  With
    ``variable="cole-hopf"`` the transformed residual is tested instead
    (same sign, since it is the direct residual times e^{μ₂u}).
    """
    return _check(alpha, lam, coeffs, tol, 1.0, "lower", variable)


def check_upper_solution(beta, lam: float, coeffs, tol: float = 1e-8,
                         variable: str = "direct-u") -> SolutionCheck:
    """Residual ≥ −tol at interior nodes and beta ≥ 0 on the boundary."""
    return _check(beta, lam, coeffs, tol, -1.0, "upper", variable)


def monotone_iterate(alpha, beta, lam: float, coeffs, opts: SolverOptions | None = None,
                     check_tol: float = 1e-8) -> Solution:
    """Solution between an ordered lower/upper pair.

    Projected Newton (iterates clipped to [alpha, beta]) is run from beta
    and from alpha; both limits must agree and stay ordered.

    Raises
    ------
    ValueError
        If alpha, beta are not an ordered lower/upper pair.
    OrderingError
        If a limit leaves [alpha, beta] beyond ``check_tol`` or the two
        limits differ.
    """
    opts = SolverOptions() if opts is None else opts
    if opts.variable != "direct-u":
        opts = replace(opts, variable="direct-u")
    mesh = coeffs.mesh
    alpha = mesh.check_field(alpha, "alpha")
    beta = mesh.check_field(beta, "beta")
    if np.any(alpha > beta):
        raise ValueError("alpha must lie below beta nodewise")
    lo = check_lower_solution(alpha, lam, coeffs, check_tol)
    up = check_upper_solution(beta, lam, coeffs, check_tol)
    if not lo:
        raise ValueError(f"alpha is not a lower solution (worst violation {lo.worst:.3e})")
    if not up:
        raise ValueError(f"beta is not an upper solution (worst violation {up.worst:.3e})")
    a_int, b_int = _restrict(mesh, alpha), _restrict(mesh, beta)

    def project(x):
        return np.clip(x, a_int, b_int)

    system = _System(float(lam), coeffs, "direct-u")
    results = []
    for start in (b_int, a_int):
        x, res, iters, sign, hist, tol = _newton(system, start.copy(), opts, project=project)
        u = _embed(mesh, x)
        if np.any(u < alpha - check_tol) or np.any(u > beta + check_tol):
            raise OrderingError("iterate left the order interval [alpha, beta]")
        results.append(Solution(u, float(lam), res, iters, sign, "direct-u", tol, hist))
    gap = float(np.max(np.abs(results[0].u - results[1].u)))
    if gap > check_tol:
        raise OrderingError(f"iterations from alpha and beta disagree by {gap:.3e}")
    return results[0]


# ---------------------------------------------------------------------------
# p-Laplacian


def p_laplacian_residual(u, p: float, a, f, mesh: Mesh | None = None, spacing=None) -> np.ndarray:
    """Residual of −Δ_p u + a|u|^{p−2}u − f with conservative face fluxes.

    Face fluxes are |∇u|^{p−2}∇u with the normal derivative taken across the
    face and, in 2D, the tangential derivative averaged from the two
    adjacent centred differences.  Boundary entries are zero.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    u = np.asarray(u, float)
    if spacing is None:
        if mesh is None:
            raise ValueError("give a mesh or the spacing")
        spacing = mesh.spacing
    a = np.broadcast_to(np.asarray(a, float), u.shape)
    f = np.broadcast_to(np.asarray(f, float), u.shape)
    return kernels.p_laplacian_residual(np.ascontiguousarray(u), float(p), np.ascontiguousarray(a),
                                        np.ascontiguousarray(f), tuple(spacing))


def _coloring(mesh: Mesh):
    """Colour classes of interior nodes with disjoint residual stencils."""
    if mesh.dimension == 1:
        n = mesh.interior_shape[0]
        idx = np.arange(n)
        return [idx[idx % 3 == c] for c in range(3)]
    nx, ny = mesh.interior_shape
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    col = (i % 3) * 3 + (j % 3)
    return [np.flatnonzero(col.ravel() == c) for c in range(9)]


def _stencil_pattern(mesh: Mesh):
    """Sparsity pattern (rows, cols) of the p-Laplacian Jacobian on the interior."""
    shape = mesh.interior_shape
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    rows, cols = [], []
    offsets = [(-1,), (0,), (1,)] if mesh.dimension == 1 else \
        [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]
    for off in offsets:
        src = tuple(slice(max(0, -o), s - max(0, o)) for o, s in zip(off, shape))
        dst = tuple(slice(max(0, o), s - max(0, -o)) for o, s in zip(off, shape))
        rows.append(idx[src].ravel())
        cols.append(idx[dst].ravel())
    return np.concatenate(rows), np.concatenate(cols)


def solve_p_laplacian(mesh: Mesh, p: float, a, f, boundary=None, u_init=None,
                      tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Solve −Δ_p u + a|u|^{p−2}u = f with Dirichlet data ``boundary``.

    p = 2 is a single sparse solve.  Otherwise damped Newton with a
    finite-difference Jacobian assembled by stencil colouring, started from
    the p = 2 solution.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    a = np.broadcast_to(np.asarray(a, float), mesh.shape).copy()
    f = np.broadcast_to(np.asarray(f, float), mesh.shape).copy()
    if np.any(a < 0):
        raise ValueError("a must be nonnegative")
    g = np.zeros(mesh.shape) if boundary is None else \
        np.broadcast_to(np.asarray(boundary, float), mesh.shape).copy()
    g[mesh.interior_mask] = 0.0
    sl = _interior_sl(mesh)
    L, _ = interior_operators(mesh)
    if u_init is None:
        # linear solve with the boundary data moved to the right-hand side
        rhs = _restrict(mesh, f) - _restrict(mesh, kernels.neg_laplacian(g, mesh.spacing))
        u = g.copy()
        u[sl] = spla.spsolve((L + sp.diags(_restrict(mesh, a))).tocsc(), rhs).reshape(mesh.interior_shape)
        if p == 2:
            return u
    else:
        u = mesh.check_field(u_init, "u_init").copy()
        u[mesh.boundary_mask] = g[mesh.boundary_mask]

    if mesh.dimension == 1 and p < 2:
        return _solve_p_mixed_1d(mesh, p, a, f, u, tol, max_iter)

    def F(x):
        v = u.copy()
        v[sl] = x.reshape(mesh.interior_shape)
        return _restrict(mesh, p_laplacian_residual(v, p, a, f, spacing=mesh.spacing))

    colors = _coloring(mesh)
    rows, cols = _stencil_pattern(mesh)
    n = rows.max() + 1
    # colour of each column, and which row each (row, col) entry reads from
    col_color = np.empty(n, dtype=np.int64)
    for c, members in enumerate(colors):
        col_color[members] = c
    x = _restrict(mesh, u)
    r = F(x)
    nrm = np.max(np.abs(r))
    scale_tol = tol * max(1.0, np.max(np.abs(f)))
    for _ in range(max_iter):
        if nrm <= scale_tol:
            break
        vals = np.empty(rows.size)
        for c, members in enumerate(colors):
            step = 1e-7 * np.maximum(1.0, np.abs(x[members]))
            xp = x.copy()
            xp[members] += step
            dF = F(xp) - r
            sel = col_color[cols] == c
            hstep = np.zeros(n)
            hstep[members] = step
            vals[sel] = dF[rows[sel]] / hstep[cols[sel]]
        J = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
        dx = spla.spsolve(J, -r)
        t = 1.0
        while t > 1e-8:
            r_new = F(x + t * dx)
            n_new = np.max(np.abs(r_new))
            if n_new < (1 - 1e-4 * t) * nrm:
                break
            t *= 0.5
        else:
            break
        x, r, nrm = x + t * dx, r_new, n_new
    if nrm > scale_tol:
        # For p < 2 the flux is singular where the gradient vanishes and the
        # coloured difference Jacobian can stall; Newton-Krylov copes.
        sol = optimize.root(F, x, method="krylov", options={"fatol": scale_tol, "maxiter": 500})
        n_sol = np.max(np.abs(F(sol.x)))
        if n_sol < nrm:
            x, nrm = sol.x, n_sol
    u[sl] = x.reshape(mesh.interior_shape)
    if nrm > max(scale_tol, 1e-6):
        raise DivergenceError(f"p-Laplacian Newton stalled at residual {nrm:.3e}")
    return u


def _solve_p_mixed_1d(mesh, p, a, f, u, tol, max_iter):
    """1D solve for p < 2 with the face fluxes F = |u'|^{p-2}u' as unknowns.

    The inverse flux map d = |F|^{1/(p-1)-1}F is C¹ for p < 2, unlike the
    forward map, so Newton behaves.  ``u`` carries the boundary values and
    the initial guess.
    """
    n = mesh.shape[0]
    (h,) = mesh.spacing
    ni, nf = n - 2, n - 1
    q = 1.0 / (p - 1.0)
    d0 = np.diff(u) / h
    Fl = np.abs(d0) ** (p - 2.0) * d0
    Fl[d0 == 0] = 0.0
    x = np.concatenate([u[1:-1], Fl])
    k = np.arange(nf)
    # structural part of the Jacobian: face rows (difference of u), node rows (divergence of F)
    r_fu = np.concatenate([k[k < ni], k[k >= 1]])
    c_fu = np.concatenate([k[k < ni], k[k >= 1] - 1])
    v_fu = np.concatenate([np.full((k < ni).sum(), 1.0 / h), np.full((k >= 1).sum(), -1.0 / h)])
    i = np.arange(ni)
    r_nf = np.concatenate([nf + i, nf + i])
    c_nf = np.concatenate([ni + i + 1, ni + i])
    v_nf = np.concatenate([np.full(ni, -1.0 / h), np.full(ni, 1.0 / h)])

    def split(x):
        full = u.copy()
        full[1:-1] = x[:ni]
        return full, x[ni:]

    def resid(x):
        full, F = split(x)
        e1 = (np.diff(full) / h - np.abs(F) ** (q - 1.0) * F) / h
        ui = full[1:-1]
        e2 = -np.diff(F) / h + a[1:-1] * np.abs(ui) ** (p - 2.0) * ui * (ui != 0) - f[1:-1]
        return np.concatenate([e1, e2])

    scale = max(1.0, float(np.max(np.abs(f))))
    r = resid(x)
    nrm = np.linalg.norm(r)
    for _ in range(max_iter):
        full, F = split(x)
        primal = p_laplacian_residual(full, p, a, f, spacing=mesh.spacing)
        if np.max(np.abs(primal)) <= tol * scale:
            return full
        ui = full[1:-1]
        du = (p - 1.0) * np.maximum(np.abs(ui), 1e-12) ** (p - 2.0) * a[1:-1]
        rows = np.concatenate([r_fu, np.arange(nf), r_nf, nf + i])
        cols = np.concatenate([c_fu, ni + np.arange(nf), c_nf, i])
        vals = np.concatenate([v_fu / h, -q * np.abs(F) ** (q - 1.0) / h, v_nf, du])
        J = sp.csc_matrix((vals, (rows, cols)), shape=(ni + nf, ni + nf))
        dx = spla.spsolve(J, -r)
        t = 1.0
        while t > 1e-10:
            r_new = resid(x + t * dx)
            n_new = np.linalg.norm(r_new)
            if n_new <= (1.0 - 1e-4 * t) * nrm:
                break
            t *= 0.5
        else:
            break
        x, r, nrm = x + t * dx, r_new, n_new
    full, _ = split(x)
    res = np.max(np.abs(p_laplacian_residual(full, p, a, f, spacing=mesh.spacing)))
    if res > max(tol * scale, 1e-6):
        raise DivergenceError(f"p-Laplacian Newton stalled at residual {res:.3e}")
    return full
