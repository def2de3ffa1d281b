"""Uniform tensor-product meshes on intervals and rectangles.

Fields living on a :class:`Mesh` are plain ``numpy`` arrays of shape
``mesh.shape`` (``(nx,)`` in 1D, ``(nx, ny)`` in 2D, ``ij`` indexing).
Flat node indices follow C order of that shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Relative slack used when testing strict (open-set) membership, so that a
# node sitting on a region boundary up to rounding is treated as outside.
_MEMBERSHIP_RTOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh construction or mismatched field."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform grid on ``prod([lower[k], upper[k]])``.

    Boundary nodes are the nodes on any face of the box; every other node is
    interior and has a full 3-point (1D) or 5-point (2D) stencil.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.shape)):
            raise MeshError("lower, upper and shape must have the same length")
        if len(self.shape) not in (1, 2):
            raise MeshError("only 1D and 2D meshes are supported")
        for a, b, n in zip(self.lower, self.upper, self.shape):
            if not b > a:
                raise MeshError(f"degenerate extent [{a}, {b}]")
            if n < 3:
                raise MeshError(f"need at least 3 nodes per axis, got {n}")

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.lower, self.upper, self.shape))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.shape))

    @cached_property
    def grids(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``mesh.shape``, one per axis."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def node_coordinates(self) -> np.ndarray:
        """``(size, dimension)`` array of node positions in flat order."""
        return np.stack([g.ravel() for g in self.grids], axis=1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.dimension):
            sl = [slice(None)] * self.dimension
            sl[k] = 0
            mask[tuple(sl)] = True
            sl[k] = -1
            mask[tuple(sl)] = True
        return mask

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    @cached_property
    def interior_index_set(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @cached_property
    def boundary_index_set(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @cached_property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(n - 2 for n in self.shape)

    @cached_property
    def cell_volume(self) -> np.ndarray:
        """Quadrature weight per node: full cells inside, half cells on faces."""
        vol = np.ones(self.shape)
        for k, (n, hk) in enumerate(zip(self.shape, self.spacing)):
            w = np.full(n, hk)
            w[0] = w[-1] = 0.5 * hk
            shape = [1] * self.dimension
            shape[k] = n
            vol = vol * w.reshape(shape)
        return vol

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    def refine(self) -> "Mesh":
        """Halve the spacing on every axis."""
        return Mesh(self.lower, self.upper, tuple(2 * (n - 1) + 1 for n in self.shape))

    def check_field(self, field, name: str = "field") -> np.ndarray:
        arr = np.asarray(field, dtype=float)
        if arr.shape != self.shape:
            if arr.size == self.size:
                arr = arr.reshape(self.shape)
            else:
                raise MeshError(f"{name} has shape {arr.shape}, mesh has {self.shape}")
        if not np.all(np.isfinite(arr)):
            raise MeshError(f"{name} contains non-finite values")
        return arr

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(*coords)`` on the nodes."""
        return np.broadcast_to(np.asarray(func(*self.grids), dtype=float), self.shape).copy()

    def __repr__(self):
        return f"Mesh(lower={self.lower}, upper={self.upper}, shape={self.shape})"


def build_interval_mesh(a: float, b: float, n: int) -> Mesh:
    return Mesh((float(a),), (float(b),), (int(n),))


def build_rectangle_mesh(rect, nx: int, ny: int) -> Mesh:
    """``rect = ((x0, y0), (x1, y1))``."""
    (x0, y0), (x1, y1) = rect
    return Mesh((float(x0), float(y0)), (float(x1), float(y1)), (int(nx), int(ny)))


def boundary_distance(mesh: Mesh) -> np.ndarray:
    """Exact Euclidean distance from each node to the boundary of the box."""
    d = np.full(mesh.shape, np.inf)
    for g, a, b in zip(mesh.grids, mesh.lower, mesh.upper):
        d = np.minimum(d, np.minimum(g - a, b - g))
    d = np.maximum(d, 0.0)
    d[mesh.boundary_mask] = 0.0
    return d


@dataclass(frozen=True)
class Region:
    """Open ball, open cube, the whole domain, or a ball cut by the domain.

    ``size`` is the radius for balls and the side length for cubes.
    """

    kind: str
    center: tuple[float, ...] = ()
    size: float = 0.0

    KINDS = ("ball", "cube", "whole-domain", "boundary-intersected-ball")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind != "whole-domain" and not self.size > 0:
            raise ValueError("region radius/side must be positive")

    @classmethod
    def ball(cls, center, radius) -> "Region":
        return cls("ball", tuple(np.atleast_1d(np.asarray(center, float))), float(radius))

    @classmethod
    def cube(cls, center, side) -> "Region":
        return cls("cube", tuple(np.atleast_1d(np.asarray(center, float))), float(side))

    @classmethod
    def whole(cls) -> "Region":
        return cls("whole-domain")

    @classmethod
    def boundary_ball(cls, center, radius) -> "Region":
        return cls("boundary-intersected-ball", tuple(np.atleast_1d(np.asarray(center, float))),
                   float(radius))

    def scaled(self, factor: float) -> "Region":
        if self.kind == "whole-domain":
            return self
        return Region(self.kind, self.center, self.size * factor)


def region_mask(mesh: Mesh, region: Region | None) -> np.ndarray:
    if region is None or region.kind == "whole-domain":
        return np.ones(mesh.shape, dtype=bool)
    if len(region.center) != mesh.dimension:
        raise MeshError("region center dimension does not match mesh")
    tol = _MEMBERSHIP_RTOL * max(region.size, max(mesh.spacing))
    if region.kind == "cube":
        mask = np.ones(mesh.shape, dtype=bool)
        for g, c in zip(mesh.grids, region.center):
            mask &= np.abs(g - c) < 0.5 * region.size - tol
        return mask
    r2 = sum((g - c) ** 2 for g, c in zip(mesh.grids, region.center))
    # Every node lies in the closed box, so the boundary-intersected ball is
    # the plain ball restricted to existing nodes.
    return np.sqrt(r2) < region.size - tol


def region_indices(mesh: Mesh, region: Region | None) -> np.ndarray:
    return np.flatnonzero(region_mask(mesh, region))


def integrate(mesh: Mesh, field, region: Region | None = None, mask=None) -> float:
    """Cell-volume quadrature of ``field`` over ``region`` (or an explicit mask)."""
    f = np.asarray(field, dtype=float).reshape(mesh.shape)
    m = region_mask(mesh, region) if mask is None else np.asarray(mask, bool)
    if not m.any():
        return 0.0
    return float(np.sum(f[m] * mesh.cell_volume[m]))


def measure(mesh: Mesh, mask) -> float:
    return float(np.sum(mesh.cell_volume[np.asarray(mask, bool)]))


def lp_norm(mesh: Mesh, field, p: float, mask=None) -> float:
    """``(sum |f|^p vol)^(1/p)`` over ``mask``; ``p = inf`` gives the max."""
    f = np.abs(np.asarray(field, dtype=float).reshape(mesh.shape))
    m = np.ones(mesh.shape, bool) if mask is None else np.asarray(mask, bool)
    if not m.any():
        return 0.0
    if np.isinf(p):
        return float(f[m].max())
    return float(np.sum(f[m] ** p * mesh.cell_volume[m]) ** (1.0 / p))
