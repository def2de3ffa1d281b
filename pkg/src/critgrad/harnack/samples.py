"""Nonnegative discrete supersolutions of −Δ_p u + a|u|^{p−2}u ≥ 0.

Two generators:

``solve-with-source``
    Solve −Δ_p u + a|u|^{p−2}u = f with zero boundary data and a random
    f ≥ 0 made of a few Gaussian bumps.  The bumps are closed-form, so the
    same seed gives the same f on every resolution.
``radial``
    Closed forms A·x_N^θ with θ ∈ [½, 1]; θ = 1 is p-harmonic.

The growth-lemma barrier is a subsolution, not a supersolution, so it lives
in :mod:`critgrad.harnack.growth` instead of here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mesh import Mesh
from ..solver import p_laplacian_residual, solve_p_laplacian

GENERATORS = ("solve-with-source", "radial")


class SampleError(ValueError):
    pass


@dataclass
class SupersolutionSample:
    """A verified nonnegative supersolution with its provenance.

    ``source`` is the f it was built from; for signed sources the sample is
    only a supersolution up to −f⁻ (see :meth:`violation`).
    """

    mesh: Mesh
    u: np.ndarray
    a: np.ndarray
    p: float
    seed: int | None = None
    generator: str = "custom"
    source: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def residual(self) -> np.ndarray:
        return p_laplacian_residual(self.u, self.p, self.a, 0.0, mesh=self.mesh)

    def violation(self) -> float:
        """Largest amount by which the supersolution inequality fails.

        With a signed source only −f⁻ is tolerated below zero.
        """
        allowed = 0.0 if self.source is None else np.minimum(self.source, 0.0)
        r = (self.residual() - allowed)[self.mesh.interior_mask]
        return float(max(0.0, -r.min())) if r.size else 0.0

    def scaled(self, t: float) -> "SupersolutionSample":
        """The sample t·u with a unchanged (still a supersolution for t > 0)."""
        src = None if self.source is None else self.source * t ** (self.p - 1)
        return SupersolutionSample(self.mesh, self.u * t, self.a, self.p, self.seed,
                                   self.generator, src, dict(self.meta))


def _tolerance(sample: SupersolutionSample) -> float:
    scale = 1.0
    if sample.source is not None:
        scale = max(scale, float(np.max(np.abs(sample.source))))
    return 1e-8 * scale


def verify(sample: SupersolutionSample) -> SupersolutionSample:
    """Raise :class:`SampleError` unless ``sample`` is a nonnegative supersolution."""
    if not sample.p > 1:
        raise SampleError(f"p must exceed 1, got {sample.p}")
    if np.any(sample.a < 0):
        raise SampleError("a must be nonnegative")
    if np.any(sample.u < -_tolerance(sample)):
        raise SampleError("sample is negative somewhere")
    v = sample.violation()
    if v > _tolerance(sample):
        raise SampleError(f"supersolution inequality violated by {v:.3e}")
    return sample


def random_bumps(rng: np.random.Generator, mesh: Mesh, n_bumps=None, signed=0.0):
    """Closed-form random source: sum of Gaussian bumps with nonnegative weights.

    Centres are drawn in the domain, widths in [0.03, 0.2] times the domain
    size.  With ``signed > 0`` one extra negative bump of relative height
    ``signed`` is added.  Returns ``(f, params)``; ``params`` regenerates f on
    any mesh through :func:`bumps_on`.
    """
    k = int(rng.integers(1, 5)) if n_bumps is None else int(n_bumps)
    lo, hi = np.asarray(mesh.lower), np.asarray(mesh.upper)
    size = float(np.min(hi - lo))
    centers = lo + rng.random((k, mesh.dimension)) * (hi - lo)
    widths = size * rng.uniform(0.03, 0.2, k)
    weights = rng.uniform(0.1, 1.0, k)
    if signed > 0:
        centers = np.vstack([centers, lo + rng.random((1, mesh.dimension)) * (hi - lo)])
        widths = np.append(widths, size * rng.uniform(0.03, 0.1))
        weights = np.append(weights, -signed * weights.max())
    params = {"centers": centers, "widths": widths, "weights": weights}
    return bumps_on(mesh, params), params


def bumps_on(mesh: Mesh, params) -> np.ndarray:
    f = np.zeros(mesh.shape)
    for c, w, a in zip(params["centers"], params["widths"], params["weights"]):
        r2 = sum((g - ci) ** 2 for g, ci in zip(mesh.grids, c))
        f += a * np.exp(-r2 / (2.0 * w * w))
    return f


def _radial(rng, mesh, p):
    # A·x_N^θ: for 1 < p and θ ∈ (0, 1] the profile is p-superharmonic
    # (concave and increasing in x_N); p-harmonic at θ = 1.
    theta = float(rng.uniform(0.5, 1.0))
    amp = float(rng.uniform(0.5, 2.0))
    xn = mesh.grids[-1] - mesh.lower[-1]
    return amp * xn ** theta, {"theta": theta, "amplitude": amp}


def generate_supersolution(seed: int, mesh: Mesh, p: float = 2.0, a=0.0,
                           generator: str = "solve-with-source", signed: float = 0.0,
                           max_tries: int = 10) -> SupersolutionSample:
    """Seeded nonnegative discrete supersolution on ``mesh``.

    Parameters
    ----------
    seed : int
    mesh : Mesh
    p : float
        Exponent, > 1.
    a : float or ndarray
        Zero-order coefficient, ≥ 0.
    generator : {"solve-with-source", "radial"}
    signed : float
        Relative height of a negative bump in the source (solve-with-source
        only).  Such samples satisfy the inequality only up to −f⁻.

    Raises
    ------
    SampleError
        If every reseeded attempt fails verification.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    a_field = np.broadcast_to(np.asarray(a, float), mesh.shape).copy()
    if np.any(a_field < 0):
        raise ValueError("a must be nonnegative")
    if generator not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}; use one of {GENERATORS}")
    last = None
    for attempt in range(max_tries):
        rng = np.random.default_rng([int(seed), attempt])
        if generator == "radial":
            u, meta = _radial(rng, mesh, p)
            sample = SupersolutionSample(mesh, u, a_field, float(p), seed, generator, None, meta)
        else:
            f, meta = random_bumps(rng, mesh, signed=signed)
            u = solve_p_laplacian(mesh, p, a_field, f)
            sample = SupersolutionSample(mesh, u, a_field, float(p), seed, generator, f, meta)
        try:
            return verify(sample)
        except SampleError as exc:
            last = exc
    raise SampleError(f"seed {seed}: no valid sample after {max_tries} tries ({last})")
