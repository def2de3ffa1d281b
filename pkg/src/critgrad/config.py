"""Run configuration: a JSON document validated against :data:`SCHEMA`.

Unknown keys are rejected at every level.  A minimal config is just
``{"problem": "1d-basic"}``; every block has defaults.
"""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from .coefficients import ProblemDefinition, benchmark_definition, benchmark_names

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_resolution = {"oneOf": [{"type": "integer", "minimum": 3},
                         {"type": "array", "items": {"type": "integer", "minimum": 3},
                          "minItems": 1, "maxItems": 2}]}
_expr = {"oneOf": [{"type": "string"}, {"type": "number"}]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = _obj({
    "problem": {"oneOf": [
        {"type": "string", "enum": benchmark_names()},
        _obj({
            "name": {"type": "string"},
            "lower": {"type": "array", "items": _num, "minItems": 1, "maxItems": 2},
            "upper": {"type": "array", "items": _num, "minItems": 1, "maxItems": 2},
            "c_plus": _expr, "c_minus": _expr, "mu": _expr, "h": _expr,
            "mu1": _num, "buffer_epsilon": _num,
        }, required=("lower", "upper", "c_plus", "c_minus", "mu", "h", "mu1", "buffer_epsilon")),
    ]},
    "resolution": _resolution,
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
    "solver": _obj({
        "lambda": _num,
        "newton_tol": _pos,
        "max_iter": _int_pos,
        "variable": {"enum": ["direct-u", "cole-hopf"]},
        "starts": {"type": "integer", "minimum": 0},
        "above_ground": {"type": "boolean"},
    }),
    "continuation": _obj({
        "lambda_start": _num,
        "lambda_min": _num,
        "lambda_max": _num,
        "initial_step": _pos,
        "min_step": _pos,
        "max_step": _pos,
        "sup_cap": _pos,
        "max_points": _int_pos,
        "variable": {"enum": ["direct-u", "cole-hopf"]},
    }),
    "harnack": _obj({
        "samples": _int_pos,
        "resolutions": {"type": "array", "items": {"type": "integer", "minimum": 9}, "minItems": 1},
        "epsilon": _pos,
        "R": _pos,
        "R_bar": _pos,
        "x0": {"type": "array", "items": _num, "minItems": 1, "maxItems": 2},
        "p": {"type": "number", "exclusiveMinimum": 1},
        "a_max": {"type": "number", "minimum": 0},
        "dimension": {"enum": [1, 2]},
        "epsilon_grid": {"type": "array", "items": _pos, "minItems": 1},
        "properties": {"type": "array", "items": {"enum": [
            "interior-weak-harnack", "local-max-principle", "brezis-cabre", "comparison",
            "growth-lemma", "distribution-decay", "gisl"]}},
        "property_instances": _int_pos,
    }),
    "certify": _obj({
        "lambda1": _pos,
        "lambda2": _pos,
        "lambda1_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "local_bounds": {"type": "boolean"},
    }),
}, required=("problem",))


class ConfigError(ValueError):
    pass


def _line_of_key(text: str, key) -> int | None:
    """First line mentioning ``"key"`` (best effort, for diagnostics)."""
    if key is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def validate(cfg: dict, text: str | None = None) -> dict:
    """Validate against :data:`SCHEMA`; raise :class:`ConfigError` with the key path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        key = err.absolute_path[-1] if err.absolute_path else None
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            key = extra[0] if extra else key
            path = "/".join([*map(str, err.absolute_path), str(key)])
        line = _line_of_key(text, key) if text else None
        where = f" (line {line})" if line else ""
        raise ConfigError(f"config error at {path}{where}: {err.message}")
    return cfg


def load(path) -> dict:
    """Read and validate a config file."""
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(cfg, text)


def problem_definition(cfg: dict) -> ProblemDefinition:
    prob = cfg["problem"]
    if isinstance(prob, str):
        base = benchmark_definition(prob)
    else:
        dim = len(prob["lower"])
        if len(prob["upper"]) != dim:
            raise ConfigError("config error at problem: lower and upper differ in length")
        base = ProblemDefinition(
            name=prob.get("name", "custom"), lower=tuple(prob["lower"]), upper=tuple(prob["upper"]),
            expressions={k: prob[k] for k in ("c_plus", "c_minus", "mu", "h")},
            mu1=prob["mu1"], buffer_epsilon=prob["buffer_epsilon"],
            resolution=(129,) * dim if dim == 1 else (33, 33))
    res = cfg.get("resolution")
    if res is not None:
        shape = (res,) * base.dimension if isinstance(res, int) else tuple(res)
        if len(shape) != base.dimension:
            raise ConfigError(f"config error at resolution: expected {base.dimension} entries")
        base = ProblemDefinition(base.name, base.lower, base.upper, base.expressions, base.mu1,
                                 base.buffer_epsilon, shape)
    return base


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON form, ignoring the output directory."""
    c = copy.deepcopy(cfg)
    c.pop("output", None)
    blob = json.dumps(c, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
