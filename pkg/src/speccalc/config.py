"""Run configuration and JSON document validation.

One RunConfig carries every knob the engines need; schema validation
reports structural problems (via jsonschema) and semantic ones with
JSON-pointer paths, so a CLI user sees `/omega: exceeds pi/2` instead
of a traceback from deep inside the quadrature.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np
from jsonschema import Draft202012Validator

from .errors import SpecCalcError, ValidationError
from .geometry import INF, MINUS, PLUS, closed_bisector_violation

__all__ = [
    "RunConfig",
    "config_from_json",
    "validate_schema",
    "ensure_valid",
]

_VERDICTS = ("Equal", "LhsSubset", "RhsSubset", "Violation")


@dataclass(frozen=True)
class RunConfig:
    """Numerical knobs shared by the CLI and the engine entry points."""

    tol: float = 1e-9
    max_panel_depth: int = 12
    nodes_per_panel: int = 8
    truncation_K: int = 64
    rank_gap_ratio: float = 10.0
    seed: int = 0
    output_dir: str = "."

    def __post_init__(self):
        issues = []
        for name in ("tol", "max_panel_depth", "nodes_per_panel",
                     "truncation_K", "rank_gap_ratio"):
            if not getattr(self, name) > 0:
                issues.append((f"/{name}", "must be positive"))
        if self.tol >= 1e-3:
            issues.append(("/tol", "must be below 1e-3"))
        if self.seed < 0:
            issues.append(("/seed", "must be non-negative"))
        if issues:
            raise ValidationError(issues)

    def describe(self) -> dict:
        return asdict(self)


def config_from_json(doc: Mapping) -> RunConfig:
    ensure_valid(doc, "config")
    return RunConfig(**{k: doc[k] for k in doc})


# ---------------------------------------------------------------------------
# structural schemas

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"},
         "minItems": 2, "maxItems": 2},
    ]
}
_COMPLEX_OR_INF = {"oneOf": [_COMPLEX, {"const": "inf"}]}

_OPERATOR_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["dense", "diagonal"]},
        "omega": {"type": "number"},
        "a": {"type": "number"},
        "matrix": {"type": "array",
                   "items": {"type": "array", "items": _COMPLEX}},
        "atoms": {"type": "array", "items": {
            "type": "object",
            "required": ["value"],
            "properties": {"value": _COMPLEX,
                           "mult": {"oneOf": [{"type": "integer"},
                                              {"const": "inf"}]}},
            "additionalProperties": False,
        }},
        "tails": {"type": "array", "items": {
            "type": "object",
            "required": ["limit"],
            "properties": {"limit": _COMPLEX_OR_INF,
                           "generator": {"enum": ["geometric", "harmonic",
                                                  "explicit"]},
                           "base": _COMPLEX,
                           "ratio": _COMPLEX,
                           "values": {"type": "array", "items": _COMPLEX}},
            "additionalProperties": False,
        }},
    },
    "additionalProperties": False,
}

_PAIR_LIST = {"type": "array", "items": {
    "type": "array", "minItems": 2, "maxItems": 2,
}}

_FUNCTION_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["rational", "constant", "zeta", "sqrt",
                          "power", "log", "expr"]},
        "label": {"type": "string"},
        "num": {"type": "array", "items": _COMPLEX},
        "den": {"type": "array", "items": _COMPLEX},
        "value": _COMPLEX,
        "exponent": {"oneOf": [{"type": "number"}, {"type": "string"},
                               {"type": "array", "items": {"type": "integer"},
                                "minItems": 2, "maxItems": 2}]},
        "text": {"type": "string"},
        "poles": _PAIR_LIST,
        "zeros": _PAIR_LIST,
        "limits": {"type": "object"},
        "decay_orders": {"type": "object"},
        "phi": {"type": "number"},
    },
    "additionalProperties": False,
}

_SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["operator", "function"],
    "properties": {
        "name": {"type": "string"},
        "operator": {"type": "object"},
        "function": {"type": "object"},
        "indices": {"type": "array",
                    "items": {"type": "integer", "minimum": 0, "maximum": 9}},
        "expected": {"type": "object"},
        "mode": {"enum": ["auto", "regularized", "bounded"]},
        "base_point": {"type": "number"},
        "regularizer": {"type": "object"},
        "point_spectrum": {
            "type": "object",
            "properties": {"forward": {"type": "boolean"},
                           "backward": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "factorization": {
            "type": "object",
            "required": ["mu"],
            "properties": {"mu": _COMPLEX, "expected": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "projection_indices": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1, "maximum": 6},
        },
        "notes": {"type": "string"},
    },
    "additionalProperties": False,
}

_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "tol": {"type": "number"},
        "max_panel_depth": {"type": "integer"},
        "nodes_per_panel": {"type": "integer"},
        "truncation_K": {"type": "integer"},
        "rank_gap_ratio": {"type": "number"},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
    },
    "additionalProperties": False,
}

_SCHEMAS = {
    "operator": _OPERATOR_SCHEMA,
    "function": _FUNCTION_SCHEMA,
    "scenario": _SCENARIO_SCHEMA,
    "config": _CONFIG_SCHEMA,
}
_VALIDATORS = {k: Draft202012Validator(v) for k, v in _SCHEMAS.items()}


def _pointer(error) -> str:
    return "/" + "/".join(str(p) for p in error.absolute_path)


def _structural(doc, kind: str) -> list[tuple[str, str]]:
    out = []
    for err in sorted(_VALIDATORS[kind].iter_errors(doc), key=str):
        out.append((_pointer(err), err.message))
    return out


# ---------------------------------------------------------------------------
# semantic layer


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _operator_semantics(doc) -> list[tuple[str, str]]:
    issues = []
    omega = doc.get("omega", math.pi / 4)
    a = doc.get("a", 0.0)
    if isinstance(omega, (int, float)):
        if omega > math.pi / 2:
            issues.append(("/omega", "exceeds pi/2"))
        elif omega <= 0:
            issues.append(("/omega", "must be positive"))
    if isinstance(a, (int, float)) and a < 0:
        issues.append(("/a", "must be non-negative"))

    kind = doc.get("kind")
    if kind == "dense":
        rows = doc.get("matrix")
        if not rows:
            issues.append(("/matrix", "dense operator needs a matrix"))
        else:
            n = len(rows)
            for i, row in enumerate(rows):
                if len(row) != n:
                    issues.append((f"/matrix/{i}", f"row has {len(row)} entries, expected {n}"))
    elif kind == "diagonal":
        if not doc.get("atoms") and not doc.get("tails"):
            issues.append(("/atoms", "diagonal model needs atoms or tails"))
        for j, entry in enumerate(doc.get("atoms", ())):
            mult = entry.get("mult", 1)
            if mult != "inf" and isinstance(mult, int) and mult <= 0:
                issues.append((f"/atoms/{j}/mult", "must be positive"))
        for j, entry in enumerate(doc.get("tails", ())):
            gen = entry.get("generator", "geometric")
            lim = entry.get("limit")
            if gen == "geometric" and "ratio" in entry:
                r = abs(_as_complex(entry["ratio"]))
                if lim == "inf" and r <= 1.0:
                    issues.append((f"/tails/{j}/ratio",
                                   "unbounded tail needs |ratio| > 1"))
                if lim != "inf" and r >= 1.0:
                    issues.append((f"/tails/{j}/ratio",
                                   "convergent tail needs |ratio| < 1"))
            if gen == "harmonic" and lim == "inf":
                issues.append((f"/tails/{j}/limit",
                               "harmonic tails converge; the limit cannot be inf"))
            if gen == "explicit" and len(entry.get("values", ())) < 8:
                issues.append((f"/tails/{j}/values",
                               "explicit tails need at least 8 elements"))
    if not issues:
        # model-level validation (tail convergence, injectivity) runs on
        # a real load attempt so its diagnostics surface here too
        from .operators import operator_from_json
        try:
            operator_from_json(doc)
        except ValidationError as exc:
            issues.extend(exc.issues)
        except SpecCalcError as exc:
            issues.append(("/", str(exc)))
    return issues


def _function_semantics(doc) -> list[tuple[str, str]]:
    issues = []
    kind = doc.get("kind")
    if kind == "rational" and not doc.get("num"):
        issues.append(("/num", "rational function needs numerator coefficients"))
    if kind == "constant" and "value" not in doc:
        issues.append(("/value", "constant function needs a value"))
    if kind == "power" and "exponent" not in doc:
        issues.append(("/exponent", "power function needs an exponent"))
    if kind == "expr":
        text = doc.get("text")
        if not text:
            issues.append(("/text", "expr function needs a source string"))
        else:
            from .functions import _Parser
            try:
                _Parser(text).parse()
            except SpecCalcError as exc:
                issues.append(("/text", str(exc)))
    for key in doc.get("limits", {}):
        if key not in (MINUS, PLUS, INF):
            issues.append((f"/limits/{key}", "unknown singular point id"))
    for key, val in doc.get("decay_orders", {}).items():
        if key not in (MINUS, PLUS, INF):
            issues.append((f"/decay_orders/{key}", "unknown singular point id"))
        elif isinstance(val, (int, float)) and val <= 0:
            issues.append((f"/decay_orders/{key}", "must be positive"))
    phi = doc.get("phi", 0.0)
    if isinstance(phi, (int, float)) and not 0.0 <= phi < math.pi / 2:
        issues.append(("/phi", "must lie in [0, pi/2)"))
    return issues


def _function_poles(doc) -> list[complex]:
    """Declared or derivable pole locations of a function document."""
    poles = [_as_complex(p) for p, _n in doc.get("poles", ())]
    if doc.get("kind") == "rational":
        den = [_as_complex(c) for c in doc.get("den", (1.0,))]
        arr = np.trim_zeros(np.asarray(den, dtype=complex), "b")
        if arr.size > 1:
            poles.extend(complex(r) for r in np.polynomial.polynomial.polyroots(arr))
    return poles


def _scenario_semantics(doc) -> list[tuple[str, str]]:
    issues = []
    for k, v in doc.get("expected", {}).items():
        try:
            idx = int(k)
        except (TypeError, ValueError):
            issues.append((f"/expected/{k}", "keys must be spectrum indices"))
            continue
        if not 0 <= idx <= 9:
            issues.append((f"/expected/{k}", "index outside 0..9"))
        if v not in _VERDICTS:
            issues.append((f"/expected/{k}", f"unknown verdict {v!r}"))

    op_doc = doc.get("operator")
    fn_doc = doc.get("function")
    if isinstance(op_doc, Mapping):
        issues.extend((f"/operator{p}" if p != "/" else "/operator", m)
                      for p, m in validate_schema(op_doc, "operator"))
    if isinstance(fn_doc, Mapping):
        issues.extend((f"/function{p}" if p != "/" else "/function", m)
                      for p, m in validate_schema(fn_doc, "function"))
    reg_doc = doc.get("regularizer")
    if isinstance(reg_doc, Mapping):
        issues.extend((f"/regularizer{p}", m)
                      for p, m in validate_schema(reg_doc, "function"))
    if issues or not isinstance(op_doc, Mapping) or not isinstance(fn_doc, Mapping):
        return issues

    # joint checks: limits must exist at the singular points the
    # operator actually has, and poles must stay off the region
    from .functions import limit_is_infinite
    from .operators import operator_from_json, singular_points, _vertex_id
    from .verifier import function_from_json
    try:
        op = operator_from_json(op_doc)
        fn = function_from_json(fn_doc)
    except ValidationError as exc:
        return list(exc.issues)

    a = op.region.halfwidth_a
    omega = op.region.omega
    for d in singular_points(op):
        if limit_is_infinite(d):
            if fn.limit_at(INF, a) is None:
                issues.append(("/function/limits",
                               "missing limit at the singular point inf"))
        else:
            sid = _vertex_id(complex(d), a)
            if sid is not None and fn.limit_at(sid, a) is None:
                issues.append(("/function/limits",
                               f"missing limit at the singular point {sid}"))
    for p in _function_poles(fn_doc):
        if closed_bisector_violation(omega, a, p) <= 1e-12 * max(1.0, abs(p)):
            near_vertex = min(abs(p - a), abs(p + a)) <= 1e-9 * max(1.0, a)
            if not near_vertex:
                issues.append(("/function/poles",
                               f"pole at {p} lies inside the operator region"))
    return issues


def _config_semantics(doc) -> list[tuple[str, str]]:
    try:
        RunConfig(**{k: doc[k] for k in doc})
    except ValidationError as exc:
        return list(exc.issues)
    except TypeError as exc:
        return [("/", str(exc))]
    return []


def validate_schema(doc, kind: str) -> list[tuple[str, str]]:
    """Structural and semantic diagnostics for a JSON document.

    Returns a list of (json-pointer path, message) pairs; an empty list
    means the document is valid for its kind.
    """
    if kind not in _SCHEMAS:
        raise ValidationError([("/kind", f"unknown document kind {kind!r}")])
    if not isinstance(doc, Mapping):
        return [("/", f"expected a JSON object, got {type(doc).__name__}")]
    issues = _structural(doc, kind)
    if issues:
        return issues
    if kind == "operator":
        return _operator_semantics(doc)
    if kind == "function":
        return _function_semantics(doc)
    if kind == "scenario":
        return _scenario_semantics(doc)
    return _config_semantics(doc)


def ensure_valid(doc, kind: str) -> None:
    """Raise ValidationError with the collected diagnostics, if any."""
    issues = validate_schema(doc, kind)
    if issues:
        raise ValidationError(issues)
