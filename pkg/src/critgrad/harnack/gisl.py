"""Dyadic covering lemma: E ⊂ F ⊂ Q₁ with the cube condition gives
|E| ≤ (1 − cα)|F|.

Sets are boolean arrays of dyadic cells, ``2**depth`` per axis.  The cube
condition "|Q ∩ E| ≥ (1 − α)|Q| ⇒ Q ⊂ F" is checked over every dyadic
subcube of Q₁ down to the cell level (non-dyadic cubes are not
enumerated).  Counts are integers, so the fast pyramid and the brute-force
enumeration agree exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels


class ContainmentError(ValueError):
    pass


@dataclass
class GislReport:
    """Outcome of one instance.

    ``c`` is the largest constant with |E| ≤ (1 − cα)|F|, i.e.
    (1 − |E|/|F|)/α (1/α when E is empty), and is meaningful only when
    ``hypotheses_met``.  ``edge`` flags c = 0 under the hypotheses, which
    can only happen because the cube condition is restricted to dyadic
    cubes.
    """

    c: float
    hypotheses_met: bool
    measure_ok: bool
    cube_condition_ok: bool
    violating_cube: tuple | None
    E_cells: int
    F_cells: int
    total_cells: int
    alpha: float
    depth: int
    dyadic_only: bool = True

    @property
    def edge(self) -> bool:
        return self.hypotheses_met and self.c <= 0

    @property
    def status(self) -> str:
        if not self.hypotheses_met:
            return "hypothesis-not-met"
        return "pass" if self.c > 0 else "edge"


def _validate(E, F, depth):
    E = np.asarray(E, bool)
    F = np.asarray(F, bool)
    n = 2 ** depth
    if E.shape != F.shape or any(s != n for s in E.shape):
        raise ValueError(f"E and F must have {n} cells per axis at depth {depth}")
    if np.any(E & ~F):
        raise ContainmentError("E is not contained in F")
    return E, F


def _constant(e, f, alpha):
    if e == 0:
        return 1.0 / alpha
    return (1.0 - e / f) / alpha


def _report(E, F, alpha, depth, violating):
    e, f, tot = int(E.sum()), int(F.sum()), E.size
    measure_ok = e <= (1.0 - alpha) * tot
    cube_ok = violating is None
    return GislReport(_constant(e, f, alpha), measure_ok and cube_ok, measure_ok, cube_ok,
                      violating, e, f, tot, float(alpha), int(depth))


def gisl_check(E, F, alpha: float, depth: int) -> GislReport:
    """Check the hypotheses and report the best constant (block-sum pyramid).

    Parameters
    ----------
    E, F : ndarray of bool
        Cell sets with ``2**depth`` cells per axis, E ⊂ F.
    alpha : float
        In (0, 1).
    depth : int

    Raises
    ------
    ContainmentError
        If E ⊄ F.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    E, F = _validate(E, F, depth)
    dim = E.ndim
    violating = None
    for level in range(depth + 1):
        cells_per_block = (2 ** (depth - level)) ** dim
        e_sum = kernels.dyadic_block_sums(np.ascontiguousarray(E), level)
        f_sum = kernels.dyadic_block_sums(np.ascontiguousarray(F), level)
        bad = (e_sum >= (1.0 - alpha) * cells_per_block) & (f_sum < cells_per_block)
        if bad.any():
            violating = (level,) + tuple(int(i) for i in np.argwhere(bad)[0])
            break
    return _report(E, F, alpha, depth, violating)


def gisl_check_naive(E, F, alpha: float, depth: int) -> GislReport:
    """Brute-force oracle: enumerate every dyadic cube and count cells directly."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    E, F = _validate(E, F, depth)
    dim = E.ndim
    violating = None
    for level in range(depth + 1):
        k = 2 ** level
        side = 2 ** (depth - level)
        for idx in np.ndindex(*(k,) * dim):
            sl = tuple(slice(i * side, (i + 1) * side) for i in idx)
            e = 0
            f = 0
            for cell in np.ndindex(*(side,) * dim):
                pos = tuple(s.start + c for s, c in zip(sl, cell))
                e += int(E[pos])
                f += int(F[pos])
            if e >= (1.0 - alpha) * side ** dim and f < side ** dim:
                violating = (level,) + tuple(idx)
                break
        if violating is not None:
            break
    return _report(E, F, alpha, depth, violating)


def closure_superset(E, alpha: float, depth: int) -> np.ndarray:
    """F = E ∪ (parents of maximal dyadic cubes satisfying the density condition).

    This is the Calderón–Zygmund construction: every cube with
    |Q ∩ E| ≥ (1 − α)|Q| lies inside F, and |E| ≤ (1 − α)|F| whenever
    |E| ≤ (1 − α)|Q₁|.
    """
    E = np.asarray(E, bool)
    dim = E.ndim
    F = E.copy()
    covered = np.zeros_like(E)
    for level in range(depth + 1):
        side = 2 ** (depth - level)
        sums = kernels.dyadic_block_sums(np.ascontiguousarray(E), level)
        dense = sums >= (1.0 - alpha) * side ** dim
        for idx in np.argwhere(dense):
            sl = tuple(slice(int(i) * side, (int(i) + 1) * side) for i in idx)
            if covered[sl].all():
                continue  # not maximal
            covered[sl] = True
            if level == 0:
                F[...] = True
            else:
                pside = 2 * side
                psl = tuple(slice((int(i) // 2) * pside, (int(i) // 2 + 1) * pside) for i in idx)
                F[psl] = True
    return F


def random_instance(rng: np.random.Generator, alpha: float, depth: int, dim: int = 2,
                    extra: float = 0.1):
    """Random (E, F) satisfying the hypotheses.

    E is a random cell set of density at most (1 − α) (clustered by
    thresholding a coarse random field so that dense cubes occur), F the
    closure superset plus a random fraction ``extra`` of further cells.
    """
    n = 2 ** depth
    coarse = 2 ** int(rng.integers(0, depth + 1))
    field = rng.random((coarse,) * dim)
    field = np.kron(field, np.ones((n // coarse,) * dim)) + 0.5 * rng.random((n,) * dim)
    density = rng.uniform(0.05, 1.0 - alpha)
    E = field > np.quantile(field, 1.0 - density)
    while E.sum() > (1.0 - alpha) * E.size:
        E[tuple(rng.integers(0, n, dim))] = False
    F = closure_superset(E, alpha, depth) | (rng.random((n,) * dim) < extra)
    return E, F
