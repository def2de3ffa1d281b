"""Tiny arithmetic grammar for coefficient fields.

Expressions are parsed with :mod:`ast` and evaluated over numpy coordinate
arrays.  Supported syntax::

    numbers, x, y, pi, e
    + - * / ^ (or **), unary -, parentheses
    exp sin cos log sqrt abs min max
    ind(a, b)                 indicator of the open interval a < x < b
    box(x0, x1, y0, y1)       indicator of the open box (2D)
    bump(c, r)                (1 - ((x - c)/r)^2)^3 on |x - c| < r, else 0
    bump2(cx, cy, r)          radial version of bump in 2D
    pos(f), neg(f)            positive / negative part

``^`` is exponentiation (same precedence as ``**``), not xor.
"""
from __future__ import annotations

import ast
import operator

import numpy as np


class ExpressionError(ValueError):
    pass


def _ind(x, a, b):
    return ((x > a) & (x < b)).astype(float)


def _bump(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, (1.0 - np.minimum(t * t, 1.0)) ** 3, 0.0)


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}

_FUNCS = {
    "exp": np.exp, "sin": np.sin, "cos": np.cos, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs,
    "min": np.minimum, "max": np.maximum,
    "pos": lambda f: np.maximum(f, 0.0), "neg": lambda f: np.maximum(-f, 0.0),
}


class Expression:
    """A parsed coefficient expression; call with coordinate arrays."""

    def __init__(self, source):
        if isinstance(source, (int, float)):
            source = repr(float(source))
        if not isinstance(source, str):
            raise ExpressionError(f"expression must be a string or number, got {type(source).__name__}")
        self.source = source
        try:
            # ^ would otherwise parse with xor precedence, below + and *
            self._tree = ast.parse(source.strip().replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        self._check(self._tree.body)

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"unary operator not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.keywords:
                raise ExpressionError(f"bad call in {self.source!r}")
            if node.func.id not in _FUNCS and node.func.id not in ("ind", "box", "bump", "bump2"):
                raise ExpressionError(f"unknown function {node.func.id!r} in {self.source!r}")
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Name):
            if node.id not in ("x", "y", "pi", "e"):
                raise ExpressionError(f"unknown name {node.id!r} in {self.source!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"bad constant in {self.source!r}")
        else:
            raise ExpressionError(f"syntax {type(node).__name__} not allowed in {self.source!r}")

    def __call__(self, x, y=None):
        env = {"x": np.asarray(x, float), "pi": np.pi, "e": np.e}
        if y is not None:
            env["y"] = np.asarray(y, float)
        out = self._eval(self._tree.body, env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(env["x"])).copy()

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise ExpressionError(f"variable {node.id!r} undefined in {len(env) - 2}D")
            return env[node.id]
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        args = [self._eval(a, env) for a in node.args]
        fn = node.func.id
        if fn == "ind":
            self._arity(fn, args, 2)
            return _ind(env["x"], *args)
        if fn == "box":
            self._arity(fn, args, 4)
            if "y" not in env:
                raise ExpressionError("box() needs a 2D domain")
            return _ind(env["x"], args[0], args[1]) * _ind(env["y"], args[2], args[3])
        if fn == "bump":
            self._arity(fn, args, 2)
            return _bump((env["x"] - args[0]) / args[1])
        if fn == "bump2":
            self._arity(fn, args, 3)
            if "y" not in env:
                raise ExpressionError("bump2() needs a 2D domain")
            r = np.sqrt((env["x"] - args[0]) ** 2 + (env["y"] - args[1]) ** 2)
            return _bump(r / args[2])
        with np.errstate(all="ignore"):
            return _FUNCS[fn](*args)

    def _arity(self, fn, args, n):
        if len(args) != n:
            raise ExpressionError(f"{fn}() takes {n} arguments in {self.source!r}")

    def __repr__(self):
        return f"Expression({self.source!r})"
