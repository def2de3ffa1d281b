"""Seeded sample suites: generation is independent per sample, aggregation
happens in a single reducer, so results do not depend on the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..mesh import build_rectangle_mesh, build_interval_mesh
from .inequalities import boundary_weak_harnack
from .samples import generate_supersolution


def sample_seeds(seed: int, n: int) -> list[int]:
    """Independent per-sample seeds derived from one root seed."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def parallel_map(func, items, threads: int = 1):
    items = list(items)
    if threads <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def unit_mesh(resolution: int, dim: int = 2):
    if dim == 1:
        return build_interval_mesh(0.0, 1.0, resolution)
    return build_rectangle_mesh(((0.0, 0.0), (1.0, 1.0)), resolution, resolution)


@dataclass
class SuiteResult:
    resolution: int
    reports: list  # InequalityReport per sample, in seed order
    seeds: list

    @property
    def constants(self) -> np.ndarray:
        return np.array([r.constant for r in self.reports])

    @property
    def min_constant(self) -> float:
        return float(np.min(self.constants))

    @property
    def failures(self) -> int:
        return sum(r.failed for r in self.reports)


def sample_coefficient(seed: int, a_max: float) -> float:
    """Constant zero-order coefficient a ∈ [0, a_max] drawn from the sample seed."""
    return float(np.random.default_rng([int(seed), 999]).uniform(0.0, a_max))


def boundary_suite(n_samples: int = 200, resolution: int = 65, epsilon: float = 0.5,
                   R: float = 0.2, x0=(0.5, 0.0), p: float = 2.0, a_max: float = 1.0,
                   seed: int = 0, threads: int = 1, dim: int = 2,
                   R_bar: float | None = None) -> SuiteResult:
    """Boundary weak Harnack constants over seeded solve-with-source samples.

    Sample k uses the k-th spawned seed, so the same seed gives the same
    sources (closed-form bumps) on every resolution.
    """
    mesh = unit_mesh(resolution, dim)
    seeds = sample_seeds(seed, n_samples)
    x0 = tuple(np.atleast_1d(np.asarray(x0, float)))

    def one(s):
        smp = generate_supersolution(s, mesh, p, a=sample_coefficient(s, a_max))
        return boundary_weak_harnack(smp, x0, R, epsilon, R_bar=R_bar)

    return SuiteResult(resolution, parallel_map(one, seeds, threads), seeds)
