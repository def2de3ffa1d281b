"""Randomised property suites for the inequality chain.

Each suite draws ``n`` instances from one root seed, evaluates a check on
every instance and counts failures.  A failure is a report whose status is
``"fail"``; instances whose hypotheses are not met are counted separately.
Instances alternate between 1D (p ∈ {1.5, 2, 3} where the check allows
p ≠ 2) and 2D (p = 2) meshes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..mesh import build_interval_mesh, build_rectangle_mesh
from ..solver import solve_p_laplacian
from .frames import frame_mesh
from .gisl import gisl_check, gisl_check_naive, random_instance
from .growth import distribution_decay_check, growth_lemma_check
from .inequalities import (brezis_cabre_check, comparison_check, interior_weak_harnack,
                           local_max_principle_check)
from .samples import generate_supersolution, random_bumps
from .suites import parallel_map, sample_seeds

P_GRID_1D = (1.5, 2.0, 3.0)
S_GRID = (0.5, 1.0, 2.0, 4.0)


def decay_calibration() -> dict:
    """The stored (M, μ) calibration record."""
    text = resources.files("critgrad.data").joinpath("decay_calibration.json").read_text()
    return json.loads(text)


@dataclass
class PropertySummary:
    name: str
    instances: int
    failures: int
    not_applicable: int
    min_constant: float
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        return (f"{self.name}: {self.instances} instances, {self.failures} failures, "
                f"{self.not_applicable} hypothesis-not-met, min constant {self.min_constant:.6g}")


def _summarise(name, outcomes, notes=None):
    """``outcomes`` holds (status, constant) pairs."""
    fails = sum(st == "fail" for st, _ in outcomes)
    na = sum(st == "hypothesis-not-met" for st, _ in outcomes)
    cs = [c for st, c in outcomes if st == "pass" and np.isfinite(c)]
    return PropertySummary(name, len(outcomes), fails, na, float(min(cs)) if cs else np.nan,
                           notes or {})


_MESHES = {}


def _mesh(dim, n):
    key = (dim, n)
    if key not in _MESHES:
        _MESHES[key] = build_interval_mesh(0.0, 1.0, n) if dim == 1 else \
            build_rectangle_mesh(((0.0, 0.0), (1.0, 1.0)), n, n)
    return _MESHES[key]


def _setting(rng, k, n1, n2):
    """Alternate 1D/2D; returns (mesh, p, a)."""
    if k % 2 == 0:
        return _mesh(1, n1), float(rng.choice(P_GRID_1D)), float(rng.uniform(0, 1))
    return _mesh(2, n2), 2.0, float(rng.uniform(0, 1))


def _random_center(rng, mesh, reach):
    lo = np.asarray(mesh.lower) + reach
    hi = np.asarray(mesh.upper) - reach
    return lo + rng.random(mesh.dimension) * (hi - lo)


def interior_weak_harnack_suite(n=1000, seed=0, n1=129, n2=33, threads=1):
    def one(item):
        k, s = item
        rng = np.random.default_rng([s, 1])
        mesh, _, a = _setting(rng, k, n1, n2)
        smp = generate_supersolution(s, mesh, 2.0, a)
        R = float(rng.uniform(0.06, 0.12))
        y = _random_center(rng, mesh, 4 * R)
        rep = interior_weak_harnack(smp, y, R, float(rng.choice(S_GRID)), b=smp.source)
        return rep.status, rep.constant
    return _summarise("interior-weak-harnack", parallel_map(one, enumerate(sample_seeds(seed, n)), threads))


def local_max_principle_suite(n=1000, seed=0, n1=129, n2=33, threads=1):
    """Solutions with signed sources are lower solutions; interior and boundary balls."""
    def one(item):
        k, s = item
        rng = np.random.default_rng([s, 2])
        mesh, _, a = _setting(rng, k, n1, n2)
        b, _ = random_bumps(rng, mesh, signed=float(rng.uniform(0, 2)))
        u = solve_p_laplacian(mesh, 2.0, a, b)
        R = float(rng.uniform(0.05, 0.15))
        st = float(rng.choice(S_GRID))
        if k % 4 < 2:
            rep = local_max_principle_check(mesh, u, a, b, _random_center(rng, mesh, 2 * R), R, st)
        else:
            x0 = _random_center(rng, mesh, 0.0)
            x0[-1] = 0.0
            rep = local_max_principle_check(mesh, u, a, b, x0, R, st, boundary=True)
        return rep.status, rep.constant
    return _summarise("local-max-principle", parallel_map(one, enumerate(sample_seeds(seed, n)), threads))


def brezis_cabre_suite(n=1000, seed=0, n1=129, n2=33, threads=1):
    def one(item):
        k, s = item
        rng = np.random.default_rng([s, 3])
        mesh, _, a = _setting(rng, k, n1, n2)
        R = float(rng.uniform(0.05, 0.2))
        y = _random_center(rng, mesh, 2 * R)
        f, _ = random_bumps(rng, mesh)
        u = solve_p_laplacian(mesh, 2.0, a, f)
        rep = brezis_cabre_check(mesh, u, a, f, y, R)
        return rep.status, rep.constant
    return _summarise("brezis-cabre", parallel_map(one, enumerate(sample_seeds(seed, n)), threads))


def comparison_suite(n=1000, seed=0, n1=129, n2=33, threads=1):
    """Pairs u, v solving with ordered sources and ordered boundary data."""
    def one(item):
        k, s = item
        rng = np.random.default_rng([s, 4])
        mesh, p, a = _setting(rng, k, n1, n2)
        fv, _ = random_bumps(rng, mesh)
        fu = fv - rng.uniform(0, 1) * random_bumps(rng, mesh)[0]
        gv = np.full(mesh.shape, float(rng.uniform(0, 0.05)))
        gu = gv - float(rng.uniform(0, 0.05))
        v = solve_p_laplacian(mesh, p, a, fv, boundary=gv)
        u = solve_p_laplacian(mesh, p, a, fu, boundary=gu)
        res = comparison_check(mesh, u, v, p, a, tol=1e-7)
        if not res.hypotheses_met:
            return "hypothesis-not-met", np.nan
        return ("pass" if res.verdict else "fail"), -res.max_excess
    return _summarise("comparison", parallel_map(one, enumerate(sample_seeds(seed, n)), threads))


def growth_lemma_suite(n=1000, seed=0, n1=97, n2=49, nu=0.05, threads=1):
    """Supersolutions on the Q_{3/2} frame; ν fixed."""
    meshes = {1: frame_mesh(1.5, n1, 1), 2: frame_mesh(1.5, n2, 2)}

    def one(item):
        k, s = item
        rng = np.random.default_rng([s, 5])
        dim = 1 if k % 2 == 0 else 2
        mesh = meshes[dim]
        p = float(rng.choice(P_GRID_1D)) if dim == 1 else 2.0
        a = float(rng.uniform(0, 1))
        smp = generate_supersolution(s, mesh, p, a)
        u = smp.u * 10.0 ** rng.uniform(0, 3)
        rep = growth_lemma_check(mesh, u, nu, p, a)
        return rep.status, rep.constant
    return _summarise("growth-lemma", parallel_map(one, enumerate(sample_seeds(seed, n)), threads))


def distribution_decay_suite(n=1000, seed=0, n1=257, n2=65, threads=1, M=None, mu=None):
    cal = decay_calibration()
    M = cal["M"] if M is None else M
    mu = cal["mu"] if mu is None else mu
    meshes = {1: frame_mesh(4.0, n1, 1), 2: frame_mesh(4.0, n2, 2)}

    def one(item):
        k, s = item
        rng = np.random.default_rng([s, 6])
        dim = 1 if k % 2 == 0 else 2
        mesh = meshes[dim]
        p = float(rng.choice(P_GRID_1D)) if dim == 1 else 2.0
        smp = generate_supersolution(s, mesh, p, float(rng.uniform(0, 1)))
        table = distribution_decay_check(mesh, smp.u, M, mu, cal.get("J", 4))
        return ("pass" if table.verdict else "fail"), 1.0 - table.worst_ratio
    return _summarise("distribution-decay", parallel_map(one, enumerate(sample_seeds(seed, n)), threads),
                      {"M": M, "mu": mu})


def gisl_suite(n=1000, seed=0, alpha=0.5, depth=4, dim=2, oracle=True):
    """Random instances satisfying the hypotheses, each cross-checked by brute force."""
    rng = np.random.default_rng(seed)
    outcomes, disagreements = [], 0
    for _ in range(n):
        E, F = random_instance(rng, alpha, depth, dim)
        rep = gisl_check(E, F, alpha, depth)
        if oracle and rep != gisl_check_naive(E, F, alpha, depth):
            disagreements += 1
        if not rep.hypotheses_met:
            outcomes.append(("hypothesis-not-met", np.nan))
        else:
            outcomes.append(("pass" if rep.c > 0 else "fail", rep.c))
    summary = _summarise("gisl", outcomes, {"oracle_disagreements": disagreements,
                                            "dyadic_only": True})
    summary.failures += disagreements
    return summary


SUITES = {
    "interior-weak-harnack": interior_weak_harnack_suite,
    "local-max-principle": local_max_principle_suite,
    "brezis-cabre": brezis_cabre_suite,
    "comparison": comparison_suite,
    "growth-lemma": growth_lemma_suite,
    "distribution-decay": distribution_decay_suite,
    "gisl": gisl_suite,
}
