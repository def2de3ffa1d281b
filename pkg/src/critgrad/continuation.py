"""Pseudo-arclength continuation in λ, fold detection, and the λ-threshold
beyond which no solution lying above u₀ on a ball can exist.

Branch geometry is always measured in (u, λ) with the mean-square norm of
u, whichever variable the corrector uses.  In ``"cole-hopf"`` mode the
corrector solves for w = (e^{μ₂u} − 1)/μ₂ while the arclength constraint is
imposed on u = log(1 + μ₂w)/μ₂, so large solutions do not distort the step
size.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import solver as S
from .mesh import Mesh, Region, region_mask

log = logging.getLogger(__name__)


class ContinuationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ContinuationControls:
    """Step control and stop rules for :func:`trace_branch`.

    ``sup_cap`` bounds ‖u‖∞; the default of 100 keeps e^{μ₂u} far from
    floating-point overflow in the Cole–Hopf variable.
    """

    initial_step: float = 0.05
    min_step: float = 1e-6
    max_step: float = 1.0
    grow_after: int = 4
    easy_iterations: int = 3
    max_corrector: int = 12
    lambda_min: float = -np.inf
    lambda_max: float = np.inf
    sup_cap: float = 100.0
    max_points: int = 2000
    fold_refinement: int = 4
    max_turn: float = 0.9  # minimum cosine between consecutive tangents
    max_drift: float = 0.5  # corrector displacement allowed, relative to the step
    variable: str | None = None  # None: see default_variable
    newton_tol: float = 1e-10
    theta: float = 1.0

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step:
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if self.variable is not None and self.variable not in S.VARIABLES:
            raise ValueError(f"variable must be one of {S.VARIABLES}")


@dataclass
class BranchPoint:
    lam: float
    u: np.ndarray
    sup_norm: float
    arclength: float
    jacobian_signature: int
    residual_norm: float = 0.0
    tangent_lambda: float = 0.0
    fold: bool = False


@dataclass
class Branch:
    points: list
    coeffs: object = field(repr=False)
    variable: str = "direct-u"
    stop_reason: str = ""
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([p.sup_norm for p in self.points])

    @property
    def arclengths(self) -> np.ndarray:
        return np.array([p.arclength for p in self.points])

    @property
    def fold_indices(self) -> list:
        return [i for i, p in enumerate(self.points) if p.fold]

    def reversed(self) -> "Branch":
        total = self.points[-1].arclength
        pts = []
        rev = self.points[::-1]
        for k, p in enumerate(rev):
            # the fold flag belongs to the later point of a sign change
            flag = rev[k - 1].fold if k > 0 else False
            pts.append(BranchPoint(p.lam, p.u, p.sup_norm, total - p.arclength,
                                   p.jacobian_signature, p.residual_norm, -p.tangent_lambda, flag))
        return Branch(pts, self.coeffs, self.variable, self.stop_reason, dict(self.metadata))


# ---------------------------------------------------------------------------
# extended system


class _Extended:
    """Residual in the solver variable x plus the u ↔ x maps."""

    def __init__(self, coeffs, variable, newton_tol=1e-10):
        self.coeffs = coeffs
        self.newton_tol = newton_tol
        self.mesh = coeffs.mesh
        self.variable = variable
        self.mu2 = coeffs.mu2
        self.n = int(np.prod(self.mesh.interior_shape))
        self.cp = S._restrict(self.mesh, coeffs.c_plus)

    def x_of_u(self, u):
        if self.variable == "cole-hopf":
            return S.cole_hopf_forward(u, self.mu2)
        return u

    def u_of_x(self, x):
        if self.variable == "cole-hopf":
            return S.cole_hopf_inverse(x, self.mu2)
        return x

    def du_dx(self, x):
        if self.variable == "cole-hopf":
            return 1.0 / (1.0 + self.mu2 * x)
        return np.ones_like(x)

    def admissible(self, x):
        return self.variable != "cole-hopf" or bool(np.all(1.0 + self.mu2 * x > 0))

    def F(self, x, lam):
        full = S._embed(self.mesh, x)
        if self.variable == "cole-hopf":
            return S._restrict(self.mesh, S.residual_colehopf(full, lam, self.coeffs))
        return S._restrict(self.mesh, S.residual(full, lam, self.coeffs))

    def Fx(self, x, lam):
        full = S._embed(self.mesh, x)
        if self.variable == "cole-hopf":
            return S.jacobian_colehopf(full, lam, self.coeffs)
        return S.jacobian(full, lam, self.coeffs)

    def Flam(self, x):
        if self.variable == "cole-hopf":
            e = 1.0 + self.mu2 * x
            return -self.cp * e * np.log(e) / self.mu2
        return -self.cp * x

    def tol(self, x, lam):
        opts = S.SolverOptions(newton_tol=self.newton_tol, variable=self.variable)
        return S.effective_tolerance(S._embed(self.mesh, x), lam, self.coeffs, opts)


def _bordered(J, col, row, corner):
    return sp.bmat([[J, sp.csr_matrix(col.reshape(-1, 1))],
                    [sp.csr_matrix(row.reshape(1, -1)), sp.csr_matrix([[corner]])]], format="csc")


def _weights(n, theta):
    return theta / n


def _tangent(ext, x, lam, prev_tu, prev_tl, wgt):
    """Unit tangent (t_u, t_λ) in the weighted (u, λ) norm, oriented along prev."""
    J = ext.Fx(x, lam)
    Fl = ext.Flam(x)
    dudx = ext.du_dx(x)
    if prev_tu is None:
        z = spla.spsolve(J.tocsc(), -Fl)
        tu, tl = dudx * z, 1.0
    else:
        A = _bordered(J, Fl, wgt * prev_tu * dudx, prev_tl)
        rhs = np.zeros(ext.n + 1)
        rhs[-1] = 1.0
        z = spla.splu(A).solve(rhs)
        tu, tl = dudx * z[:-1], z[-1]
    nrm = np.sqrt(wgt * tu @ tu + tl * tl)
    tu, tl = tu / nrm, tl / nrm
    if prev_tu is not None and wgt * tu @ prev_tu + tl * prev_tl < 0:
        tu, tl = -tu, -tl
    return tu, tl


def _signature(ext, x, lam):
    try:
        return S.determinant_sign(spla.splu(ext.Fx(x, lam).tocsc()))
    except RuntimeError:
        return 0


def _correct(ext, u_pred, lam_pred, tu, tl, wgt, controls):
    """Newton on the extended system; returns (x, lam, residual, iters) or None."""
    try:
        x = ext.x_of_u(u_pred)
    except OverflowError:
        return None
    lam = lam_pred
    for it in range(controls.max_corrector + 1):
        if not ext.admissible(x):
            return None
        F = ext.F(x, lam)
        u = ext.u_of_x(x)
        N = wgt * tu @ (u - u_pred) + tl * (lam - lam_pred)
        res = float(np.max(np.abs(F)))
        if not np.isfinite(res):
            return None
        if res <= ext.tol(x, lam) and abs(N) <= 1e-10:
            return x, lam, res, it
        if it == controls.max_corrector:
            return None
        A = _bordered(ext.Fx(x, lam), ext.Flam(x), wgt * tu * ext.du_dx(x), tl)
        try:
            d = spla.splu(A).solve(-np.concatenate([F, [N]]))
        except RuntimeError:
            return None
        # keep the transformed variable inside its domain
        t = 1.0
        while not ext.admissible(x + t * d[:-1]) and t > 1e-4:
            t *= 0.5
        x = x + t * d[:-1]
        lam = lam + t * d[-1]
    return None


def default_variable(coeffs) -> str:
    """Cole–Hopf when μ is a positive constant, direct-u otherwise.

    With constant μ the transformed equation has no gradient term and stays
    well resolved for large solutions.  Where μ < μ₂ the transformed
    equation keeps a gradient term multiplied by e^{μ₂u}, which the grid
    stops resolving long before the direct form does.
    """
    mu = coeffs.mu
    if coeffs.mu2 > 0 and np.ptp(mu) <= 1e-14 * coeffs.mu2:
        return "cole-hopf"
    return "direct-u"


def trace_branch(start, direction: int = 1, controls: ContinuationControls | None = None,
                 coeffs=None) -> Branch:
    """Follow the solution curve through ``start`` by pseudo-arclength.

    Parameters
    ----------
    start : Solution
        Converged solution; its ``lam`` is the first λ of the branch.
    direction : {+1, -1}
        Initial sign of dλ/ds.
    controls : ContinuationControls, optional
    coeffs : CoefficientSet
        Problem the start solution belongs to.

    Returns
    -------
    Branch
        Points with cumulative arclength, Jacobian sign and fold flags.
        ``stop_reason`` is one of ``lambda-bound``, ``sup-cap``,
        ``max-points``, ``step-collapse`` or ``branch-point``.

    Raises
    ------
    ContinuationError
        If not even the first step can be taken.
    """
    if coeffs is None:
        raise ValueError("coeffs are required")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    controls = ContinuationControls() if controls is None else controls
    variable = controls.variable or default_variable(coeffs)
    ext = _Extended(coeffs, variable, controls.newton_tol)
    mesh = coeffs.mesh
    wgt = _weights(ext.n, controls.theta)

    # re-converge the start in the chosen variable
    sol = S.newton_solve(start.u, start.lam, coeffs,
                         S.SolverOptions(newton_tol=controls.newton_tol, variable=variable))
    x = ext.x_of_u(S._restrict(mesh, sol.u))
    lam = sol.lam
    tu, tl = _tangent(ext, x, lam, None, None, wgt)
    if tl * direction < 0:
        tu, tl = -tu, -tl
    u = ext.u_of_x(x)
    points = [BranchPoint(lam, S._embed(mesh, u), float(np.max(np.abs(u))), 0.0,
                          _signature(ext, x, lam), sol.residual_norm, tl)]
    ds = controls.initial_step
    easy = 0
    s = 0.0
    reason = "max-points"
    aug_sign = None
    pending_refine = 0

    while len(points) < controls.max_points:
        u_pred = u + ds * tu
        lam_pred = lam + ds * tl
        out = _correct(ext, u_pred, lam_pred, tu, tl, wgt, controls)
        if out is None:
            ds *= 0.5
            easy = 0
            if ds < controls.min_step:
                reason = "step-collapse"
                break
            continue
        x_new, lam_new, res, iters = out
        u_new = ext.u_of_x(x_new)
        tu_new, tl_new = _tangent(ext, x_new, lam_new, tu, tl, wgt)
        drift = np.sqrt(wgt * (u_new - u_pred) @ (u_new - u_pred) + (lam_new - lam_pred) ** 2)
        turn = wgt * tu_new @ tu + tl_new * tl
        if (drift > controls.max_drift * ds or turn < controls.max_turn) and ds > controls.min_step:
            ds *= 0.5
            easy = 0
            continue
        # fold: bracket the sign change of dλ/ds more tightly before accepting
        if tl_new * tl < 0 and pending_refine < controls.fold_refinement:
            frac = tl / (tl - tl_new)
            if 0.05 < frac < 0.95:
                ds = ds * frac
                pending_refine += 1
                continue
        pending_refine = 0
        step = np.sqrt(wgt * (u_new - u) @ (u_new - u) + (lam_new - lam) ** 2)
        s += float(step)
        sig = _signature(ext, x_new, lam_new)
        # sign of the bordered determinant flips at branch points, not folds
        A = _bordered(ext.Fx(x_new, lam_new), ext.Flam(x_new), wgt * tu_new * ext.du_dx(x_new), tl_new)
        try:
            new_aug = S.determinant_sign(spla.splu(A))
        except RuntimeError:
            new_aug = 0
        fold = bool(tl_new * tl < 0)
        points.append(BranchPoint(lam_new, S._embed(mesh, u_new), float(np.max(np.abs(u_new))), s,
                                  sig, res, tl_new, fold))
        if aug_sign is not None and new_aug != 0 and new_aug != aug_sign:
            reason = "branch-point"
            log.warning("branch point suspected near lambda=%.6g; stopping", lam_new)
            break
        aug_sign = new_aug if new_aug != 0 else aug_sign
        x, u, lam, tu, tl = x_new, u_new, lam_new, tu_new, tl_new
        if points[-1].sup_norm >= controls.sup_cap:
            reason = "sup-cap"
            break
        if not controls.lambda_min <= lam <= controls.lambda_max:
            reason = "lambda-bound"
            break
        if iters <= controls.easy_iterations:
            easy += 1
            if easy >= controls.grow_after:
                ds = min(2.0 * ds, controls.max_step)
                easy = 0
        else:
            easy = 0
    if len(points) == 1:
        raise ContinuationError(f"no continuation step possible from lambda={start.lam:g} ({reason})")
    meta = {"problem": getattr(coeffs, "name", "custom"), "direction": direction,
            "initial_step": controls.initial_step, "max_step": controls.max_step,
            "min_step": controls.min_step, "sup_cap": controls.sup_cap, "theta": controls.theta}
    return Branch(points, coeffs, variable, reason, meta)


# ---------------------------------------------------------------------------
# folds and crossings


@dataclass
class FoldReport:
    found: bool
    lam_bar: float = np.nan
    index: int = -1
    bracket: tuple = ()

    def __bool__(self):
        return self.found


def detect_fold(branch: Branch) -> FoldReport:
    """λ̄ = largest λ on the branch, refined by a parabola through the
    neighbouring samples (in arclength).  Empty if λ is maximal at an end.
    """
    if len(branch) < 3:
        raise ValueError("need at least 3 branch points")
    lam = branch.lambdas
    s = branch.arclengths
    i = int(np.argmax(lam))
    if i == 0 or i == len(lam) - 1:
        return FoldReport(False)
    # interior maximum: quadratic through (i-1, i, i+1)
    ss, ll = s[i - 1:i + 2], lam[i - 1:i + 2]
    c2, c1, c0 = np.polyfit(ss - ss[1], ll, 2)
    lam_bar = lam[i]
    if c2 < 0:
        v = -c1 / (2 * c2)
        if ss[0] - ss[1] <= v <= ss[2] - ss[1]:
            lam_bar = max(lam_bar, c0 + c1 * v + c2 * v * v)
    return FoldReport(True, float(lam_bar), i, (i - 1, i + 1))


def solutions_at(branch: Branch, lam: float, opts: S.SolverOptions | None = None,
                 distinct_tol: float = 1e-6) -> list:
    """Re-converged solutions at every crossing of ``lam`` by the branch.

    Returns an empty list for λ beyond a detected fold (the branch turns
    back before reaching it).

    Raises
    ------
    ValueError
        If ``lam`` lies outside the λ-range of the branch and beyond no fold.
    """
    lams = branch.lambdas
    lo, hi = float(lams.min()), float(lams.max())
    if lam < lo or lam > hi:
        if lam > hi and len(branch) >= 3 and detect_fold(branch):
            return []
        raise ValueError(f"lambda={lam:g} outside branch range [{lo:g}, {hi:g}]")
    opts = opts or S.SolverOptions(variable=branch.variable)
    out = []
    for i in range(len(lams) - 1):
        a, b = lams[i] - lam, lams[i + 1] - lam
        if a == 0.0 and i > 0:
            continue  # counted as the end of the previous segment
        if a * b > 0:
            continue
        t = 0.0 if a == b else a / (a - b)
        guess = (1 - t) * branch[i].u + t * branch[i + 1].u
        sol = S.newton_solve(guess, lam, branch.coeffs, opts)
        if all(np.max(np.abs(sol.u - o.u)) > distinct_tol for o in out):
            out.append(sol)
    return out


# ---------------------------------------------------------------------------
# nonexistence threshold


@dataclass
class ThresholdReport:
    """Ingredients and value of the λ-threshold for a given ball.

    ``threshold`` = γ + max(D, 0)/I with D = C_h + Σ h⁻φ vol and
    I = Σ c₊φu₀ vol over the ball.
    """

    threshold: float
    gamma: float
    phi: np.ndarray
    boundary_term: float
    h_minus_term: float
    weighted_mass: float
    iterations: int

    @property
    def D(self) -> float:
        return self.boundary_term + self.h_minus_term


def _ball_system(mesh: Mesh, mask: np.ndarray):
    """−Δ_h restricted to the ball nodes (zero outside), plus index maps."""
    idx = np.flatnonzero(mask.ravel())
    L, _ = S.interior_operators(mesh)
    interior = mesh.interior_index_set
    pos = np.full(mesh.size, -1)
    pos[interior] = np.arange(interior.size)
    if np.any(pos[idx] < 0):
        raise ValueError("ball touches boundary nodes of the domain")
    rows = pos[idx]
    return L[rows][:, rows].tocsc(), idx, pos


def first_weighted_eigenpair(mesh: Mesh, mask, weight, tol: float = 1e-13, max_iter: int = 10000):
    """Smallest γ with −Δ_h φ = γ·weight·φ on the masked nodes, φ = 0 elsewhere.

    Inverse power iteration φ ← (−Δ_h)^{-1}(weight·φ); γ is the Rayleigh
    quotient.  Returns ``(gamma, phi_full, iterations)`` with φ > 0, max 1.
    """
    mask = np.asarray(mask, bool).reshape(mesh.shape)
    A, idx, _ = _ball_system(mesh, mask)
    c = np.asarray(weight, float).ravel()[idx]
    if not np.any(c > 0):
        raise ValueError("weight vanishes on the ball")
    lu = spla.splu(A)
    phi = np.ones(idx.size)
    gamma = np.inf
    for it in range(1, max_iter + 1):
        nxt = lu.solve(c * phi)
        nxt /= np.max(np.abs(nxt))
        g = float(nxt @ (A @ nxt)) / float(nxt @ (c * nxt))
        done = abs(g - gamma) <= tol * abs(g) and np.max(np.abs(nxt - phi)) < 1e-10
        phi, gamma = nxt, g
        if done:
            break
    if phi.sum() < 0:
        phi = -phi
    full = np.zeros(mesh.size)
    full[idx] = phi
    return gamma, full.reshape(mesh.shape), it


def check_threshold_hypotheses(coeffs, ball: Region, u0) -> list:
    """Violations of: c₋ ≡ 0, μ ≥ 0 and c₊u₀ ≥ 0 (not ≡ 0) on the ball."""
    mesh = coeffs.mesh
    mask = region_mask(mesh, ball)
    problems = []
    if not mask.any():
        return ["ball contains no nodes"]
    if np.any(coeffs.c_minus[mask] != 0):
        problems.append("c_minus does not vanish on the ball")
    if np.any(coeffs.mu[mask] < 0):
        problems.append("mu is negative on the ball")
    prod = coeffs.c_plus[mask] * np.asarray(u0)[mask]
    if np.any(prod < 0) or not np.any(prod > 0):
        problems.append("c_plus*u0 is not nonnegative and nontrivial on the ball")
    if np.any(mask & mesh.boundary_mask):
        problems.append("ball contains boundary nodes")
    return problems


def nonexistence_threshold(coeffs, mesh: Mesh, ball: Region, u0) -> ThresholdReport:
    """λ beyond which no discrete solution stays above u₀ on the ball.

    Discrete counterpart of testing the equation with the first
    eigenfunction φ of −Δφ = γ min(c₊, 1) φ on the ball: summation by parts
    gives (γ − λ) Σ c₊φu vol ≥ −D, where the boundary part of D collects
    u₀·(−Δ_h φ) at the nodes just outside the ball (there −Δ_h φ ≤ 0).
    The bound assumes u ≥ u₀ on the ball and on those neighbouring nodes.

    Raises
    ------
    ValueError
        If the hypotheses fail on the ball.
    """
    if mesh is not coeffs.mesh and tuple(mesh.shape) != tuple(coeffs.mesh.shape):
        raise ValueError("mesh does not match the coefficients")
    mesh = coeffs.mesh
    u0 = mesh.check_field(u0, "u0")
    problems = check_threshold_hypotheses(coeffs, ball, u0)
    if problems:
        raise ValueError("threshold hypotheses violated: " + "; ".join(problems))
    mask = region_mask(mesh, ball)
    cbar = np.minimum(coeffs.c_plus, 1.0)
    gamma, phi, its = first_weighted_eigenpair(mesh, mask, cbar)
    from . import kernels
    lphi = kernels.neg_laplacian(phi, mesh.spacing)
    outside = mesh.interior_mask & ~mask & (lphi != 0)
    vol = mesh.cell_volume
    boundary_term = float(np.sum(u0[outside] * lphi[outside] * vol[outside]))
    hminus = np.maximum(-coeffs.h, 0.0)
    h_term = float(np.sum((hminus * phi * vol)[mask]))
    mass = float(np.sum((coeffs.c_plus * phi * u0 * vol)[mask]))
    D = boundary_term + h_term
    return ThresholdReport(gamma + max(D, 0.0) / mass, gamma, phi, boundary_term, h_term, mass, its)


def default_ball(coeffs) -> Region:
    """Largest node-aligned ball around the c₊-weighted centre avoiding c₋ and ∂Ω."""
    mesh = coeffs.mesh
    w = coeffs.c_plus * mesh.cell_volume
    center = np.array([np.sum(g * w) / np.sum(w) for g in mesh.grids])
    # snap the centre to the nearest node
    k = np.argmin(np.sum((mesh.node_coordinates - center) ** 2, axis=1))
    center = mesh.node_coordinates[k]
    d_bnd = min(min(center[i] - mesh.lower[i], mesh.upper[i] - center[i]) for i in range(mesh.dimension))
    neg = mesh.node_coordinates[coeffs.c_minus.ravel() != 0]
    d_neg = np.inf if neg.size == 0 else float(np.min(np.linalg.norm(neg - center, axis=1)))
    h = mesh.min_spacing
    R = np.floor(min(d_bnd, d_neg) / h) * h
    return Region.ball(center, float(R))
