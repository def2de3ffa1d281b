"""Result record shared by every inequality check."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class InequalityReport:
    """Two sides of an inequality and the constant that makes it tight.

    For ``direction="lower"`` the inequality reads lhs ≥ C·rhs (weak Harnack
    type); for ``direction="upper"`` it reads lhs ≤ C·rhs (maximum principle
    type).  ``constant`` is lhs/rhs, or ``inf`` (lower) when rhs ≤ 0, where
    the inequality holds for any C as soon as lhs ≥ 0.  ``status`` is
    ``"pass"``, ``"fail"`` or ``"hypothesis-not-met"``.
    """

    inequality: str
    lhs: float
    rhs: float
    constant: float
    status: str
    direction: str = "lower"
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return self.status == "pass"

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def params_string(self) -> str:
        return ";".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return "(" + " ".join(_fmt(float(x)) for x in v) + ")"
    return str(v)


def lower_report(name, lhs, rhs, params, extra=None, tol=0.0) -> InequalityReport:
    """Report for lhs ≥ C·rhs: pass iff the empirical C is positive and finite
    (or rhs ≤ 0 and lhs ≥ −tol)."""
    lhs, rhs = float(lhs), float(rhs)
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        return InequalityReport(name, lhs, rhs, np.nan, "fail", "lower", params, extra or {})
    if rhs <= 0:
        status = "pass" if lhs >= -tol else "fail"
        return InequalityReport(name, lhs, rhs, np.inf, status, "lower", params, extra or {})
    c = lhs / rhs
    return InequalityReport(name, lhs, rhs, c, "pass" if c > 0 else "fail", "lower", params, extra or {})


def upper_report(name, lhs, rhs, params, extra=None) -> InequalityReport:
    """Report for lhs ≤ C·rhs: pass iff a finite C exists."""
    lhs, rhs = float(lhs), float(rhs)
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        return InequalityReport(name, lhs, rhs, np.nan, "fail", "upper", params, extra or {})
    if rhs <= 0:
        status = "pass" if lhs <= 0 else "fail"
        return InequalityReport(name, lhs, rhs, 0.0 if lhs <= 0 else np.inf, status, "upper",
                                params, extra or {})
    return InequalityReport(name, lhs, rhs, lhs / rhs, "pass", "upper", params, extra or {})
