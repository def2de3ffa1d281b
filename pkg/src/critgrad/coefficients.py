"""Coefficient data (c₊, c₋, μ, h) and the structural checks they must pass.

A :class:`CoefficientSet` holds nodal samples on a mesh together with the
scalars μ₁ (lower bound of μ on a collar around the support of c₊), μ₂
(maximum of μ) and the collar width ε.  When built from closed-form
expressions (:class:`ProblemDefinition`) the set can be resampled on any
resolution, which is what refinement studies rely on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .expr import Expression
from .mesh import Mesh, MeshError, measure

FIELD_NAMES = ("c_plus", "c_minus", "mu", "h")


@dataclass(frozen=True)
class ProblemDefinition:
    """Closed-form description of a problem: domain, expressions, scalars.

    Parameters
    ----------
    lower, upper : tuple of float
        Corners of the interval or rectangle.
    expressions : dict
        Maps each of ``c_plus``, ``c_minus``, ``mu``, ``h`` to an expression
        string (see :mod:`critgrad.expr`) or a number.
    mu1, buffer_epsilon : float
        Structural constants of the collar condition.
    resolution : tuple of int
        Default node count per axis.
    """

    name: str
    lower: tuple
    upper: tuple
    expressions: dict
    mu1: float
    buffer_epsilon: float
    resolution: tuple

    def __post_init__(self):
        missing = set(FIELD_NAMES) - set(self.expressions)
        if missing:
            raise ValueError(f"missing coefficient expressions: {sorted(missing)}")
        if len(self.resolution) != len(self.lower):
            raise ValueError("resolution must give one node count per axis")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def mesh(self, resolution=None) -> Mesh:
        shape = self.resolution if resolution is None else _as_shape(resolution, self.dimension)
        return Mesh(tuple(map(float, self.lower)), tuple(map(float, self.upper)), shape)

    def build(self, resolution=None) -> "CoefficientSet":
        mesh = self.mesh(resolution)
        values = {}
        for key in FIELD_NAMES:
            values[key] = Expression(self.expressions[key])(*mesh.grids)
        return CoefficientSet(mesh=mesh, mu1=float(self.mu1),
                              buffer_epsilon=float(self.buffer_epsilon),
                              name=self.name, definition=self, **values)


def _as_shape(resolution, dim):
    if np.isscalar(resolution):
        return (int(resolution),) * dim
    shape = tuple(int(n) for n in resolution)
    if len(shape) != dim:
        raise ValueError(f"resolution {resolution} does not match dimension {dim}")
    return shape


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Nodal coefficients of the problem on ``mesh``.

    ``mu2`` is derived as the maximum nodal value of ``mu``.
    """

    mesh: Mesh
    c_plus: np.ndarray
    c_minus: np.ndarray
    mu: np.ndarray
    h: np.ndarray
    mu1: float
    buffer_epsilon: float
    name: str = "custom"
    definition: ProblemDefinition | None = field(default=None, repr=False)

    def __post_init__(self):
        for key in FIELD_NAMES:
            arr = self.mesh.check_field(getattr(self, key), key)
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)

    @property
    def mu2(self) -> float:
        return float(np.max(self.mu))

    def reaction(self, lam: float) -> np.ndarray:
        """The zero-order coefficient λc₊ − c₋."""
        return lam * self.c_plus - self.c_minus

    @cached_property
    def omega_plus(self) -> np.ndarray:
        """Boolean mask of the discrete support of c₊ (nodes with c₊ > 0)."""
        return self.c_plus > 0

    def resample(self, resolution) -> "CoefficientSet":
        if self.definition is None:
            raise ValueError("coefficients built from raw arrays cannot be resampled")
        return self.definition.build(resolution)

    def refine(self) -> "CoefficientSet":
        return self.resample(self.mesh.refine().shape)

    def with_fields(self, **changes) -> "CoefficientSet":
        """Copy with some fields or scalars replaced (drops the definition)."""
        kw = {k: getattr(self, k) for k in FIELD_NAMES}
        kw.update(mu1=self.mu1, buffer_epsilon=self.buffer_epsilon, name=self.name)
        kw.update(changes)
        return CoefficientSet(mesh=self.mesh, **kw)


def from_arrays(mesh: Mesh, c_plus, c_minus, mu, h, mu1: float, buffer_epsilon: float,
                name: str = "custom") -> CoefficientSet:
    """Coefficient set from raw nodal arrays (scalars are broadcast)."""
    def full(v):
        return np.broadcast_to(np.asarray(v, float), mesh.shape).copy() if np.ndim(v) == 0 else v
    return CoefficientSet(mesh=mesh, c_plus=full(c_plus), c_minus=full(c_minus), mu=full(mu),
                          h=full(h), mu1=float(mu1), buffer_epsilon=float(buffer_epsilon), name=name)


@dataclass
class ConditionResult:
    passed: bool
    offending: np.ndarray  # flat node indices

    def __bool__(self):
        return self.passed


@dataclass
class ValidationReport:
    """Verdict of every structural condition plus the measure of Ω₊."""

    conditions: dict
    omega_plus_measure: float
    collar: np.ndarray  # boolean mask of the ε-collar of supp(c₊)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def failures(self) -> list:
        return [k for k, c in self.conditions.items() if not c.passed]

    def summary(self) -> str:
        lines = [f"|Omega_+| = {self.omega_plus_measure:.6g}"]
        for k, c in self.conditions.items():
            tail = "" if c.passed else f" ({c.offending.size} nodes, first {c.offending[:5].tolist()})"
            lines.append(f"{k}: {'pass' if c.passed else 'FAIL'}{tail}")
        return "\n".join(lines)


def collar_mask(mesh: Mesh, support: np.ndarray, width: float) -> np.ndarray:
    """Nodes at distance < ``width`` from some node of ``support``."""
    support = np.asarray(support, bool).reshape(mesh.shape)
    if not support.any():
        return np.zeros(mesh.shape, bool)
    pts = mesh.node_coordinates
    tree = cKDTree(pts[support.ravel()])
    dist, _ = tree.query(pts, k=1)
    tol = 1e-12 * max(width, mesh.min_spacing)
    return (dist < width - tol).reshape(mesh.shape)


def _condition(bad) -> ConditionResult:
    idx = np.flatnonzero(bad)
    return ConditionResult(idx.size == 0, idx)


def validate_A1(coeffs: CoefficientSet, mesh: Mesh | None = None) -> ValidationReport:
    """Check the sign, disjointness, positivity and collar conditions nodewise.

    Parameters
    ----------
    coeffs : CoefficientSet
    mesh : Mesh, optional
        Must match ``coeffs.mesh`` in shape when given.

    Returns
    -------
    ValidationReport
        One :class:`ConditionResult` per condition, listing violating nodes.
    """
    mesh = coeffs.mesh if mesh is None else mesh
    if tuple(mesh.shape) != tuple(coeffs.mesh.shape):
        raise MeshError(f"coefficients live on {coeffs.mesh.shape}, mesh is {mesh.shape}")
    cp, cm, mu = coeffs.c_plus, coeffs.c_minus, coeffs.mu
    omega = cp > 0
    collar = collar_mask(mesh, omega, coeffs.buffer_epsilon)
    conds = {
        "c_plus_nonnegative": _condition(cp < 0),
        "c_minus_nonnegative": _condition(cm < 0),
        "disjoint_supports": _condition((cp != 0) & (cm != 0)),
        "omega_plus_nonempty": ConditionResult(bool(measure(mesh, omega) > 0),
                                               np.empty(0, dtype=np.int64)),
        "mu1_positive": ConditionResult(coeffs.mu1 > 0, np.empty(0, dtype=np.int64)),
        "epsilon_positive": ConditionResult(coeffs.buffer_epsilon > 0, np.empty(0, dtype=np.int64)),
        "collar_mu_lower_bound": _condition(collar & (mu < coeffs.mu1)),
        "collar_c_minus_zero": _condition(collar & (cm != 0)),
    }
    return ValidationReport(conds, measure(mesh, omega), collar)


# Benchmark catalog.  Amplitudes were chosen so that the fold of the
# positive branch sits at λ of order one on every problem.
_CATALOG = {
    "1d-basic": dict(
        lower=(0.0,), upper=(1.0,), resolution=(129,), mu1=1.0, buffer_epsilon=0.1,
        expressions={
            "c_plus": "40*bump(0.5, 0.1)",
            "c_minus": "20*bump(0.075, 0.075)",
            "mu": "1",
            "h": "4*bump(0.5, 0.05)",
        }),
    "1d-signchanging-h": dict(
        lower=(0.0,), upper=(1.0,), resolution=(129,), mu1=1.0, buffer_epsilon=0.1,
        expressions={
            "c_plus": "40*bump(0.5, 0.1)",
            "c_minus": "20*bump(0.075, 0.075)",
            "mu": "1",
            "h": "4*bump(0.5, 0.05) - 3*bump(0.85, 0.08)",
        }),
    "1d-mu-variable": dict(
        lower=(0.0,), upper=(1.0,), resolution=(129,), mu1=0.35, buffer_epsilon=0.1,
        expressions={
            "c_plus": "40*bump(0.5, 0.1)",
            "c_minus": "20*bump(0.075, 0.075)",
            "mu": "1.2*bump(0.5, 0.35)",
            "h": "4*bump(0.5, 0.05)",
        }),
    "2d-basic": dict(
        lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=(33, 33), mu1=1.0, buffer_epsilon=0.1,
        expressions={
            "c_plus": "60*bump2(0.5, 0.5, 0.2)",
            "c_minus": "20*bump2(0.12, 0.12, 0.1)",
            "mu": "1",
            "h": "4*bump2(0.5, 0.5, 0.1)",
        }),
}


def benchmark_names() -> list:
    return sorted(_CATALOG)


def benchmark_definition(name: str) -> ProblemDefinition:
    try:
        entry = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; available: {', '.join(benchmark_names())}") from None
    return ProblemDefinition(name=name, **entry)


def builtin_benchmark(name: str, resolution=None) -> tuple[CoefficientSet, Mesh]:
    """Named reproducible problem sampled at ``resolution`` (default per problem)."""
    coeffs = benchmark_definition(name).build(resolution)
    return coeffs, coeffs.mesh
