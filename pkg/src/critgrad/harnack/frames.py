"""Cube frames Q_ρ = Q_ρ(ρe) with e = (0, ½) (2D) or e = ½ (1D).

The bottom face of every frame lies on x_N = 0, so x_N doubles as the
distance to that face.  Frames are plain rectangle/interval meshes.
"""
from __future__ import annotations

import numpy as np

from ..mesh import Mesh, build_interval_mesh, build_rectangle_mesh


def frame_bounds(rho: float, dim: int = 2, center=None):
    """``(lower, upper)`` of the cube of side ``rho`` centred at ``center``.

    ``center`` defaults to ρe, which puts the bottom face on x_N = 0.
    """
    if dim == 1:
        c = rho / 2.0 if center is None else float(np.atleast_1d(center)[0])
        return (c - rho / 2.0,), (c + rho / 2.0,)
    cx, cy = (0.0, rho / 2.0) if center is None else map(float, center)
    return (cx - rho / 2.0, cy - rho / 2.0), (cx + rho / 2.0, cy + rho / 2.0)


def frame_mesh(rho: float, n: int, dim: int = 2) -> Mesh:
    """Mesh on the closed frame Q_ρ with ``n`` nodes per axis."""
    lo, hi = frame_bounds(rho, dim)
    if dim == 1:
        return build_interval_mesh(lo[0], hi[0], n)
    return build_rectangle_mesh((lo, hi), n, n)


def cube_mask(mesh: Mesh, rho: float, center=None) -> np.ndarray:
    """Nodes strictly inside Q_ρ(center) (default center ρe)."""
    lo, hi = frame_bounds(rho, mesh.dimension, center)
    tol = 1e-12 * max(rho, 1.0)
    mask = np.ones(mesh.shape, bool)
    for g, a, b in zip(mesh.grids, lo, hi):
        mask &= (g > a + tol) & (g < b - tol)
    return mask


def vertical(mesh: Mesh) -> np.ndarray:
    """The coordinate x_N on the nodes."""
    return mesh.grids[-1]
