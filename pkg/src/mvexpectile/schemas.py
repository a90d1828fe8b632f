"""JSON schemas for CLI configs and JSON outputs."""

from __future__ import annotations

import jsonschema

_pos = {"type": "number", "exclusiveMinimum": 0}
_prob = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_count = {"type": "integer", "minimum": 1}
_seed = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
_dependence = {"enum": ["independent", "comonotonic"]}
_norm = {"enum": ["l1", "max"]}


def _params(*names):
    return {
        "type": "object",
        "properties": {n: _pos for n in names},
        "required": list(names),
        "additionalProperties": False,
    }


MARGIN = {
    "type": "object",
    "properties": {
        "family": {"enum": ["pareto", "burr", "student"]},
        "params": {"type": "object"},
        "location": {"type": "number"},
        "scale": _pos,
    },
    "required": ["family", "params"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"family": {"const": "pareto"}}}, "then": {"properties": {"params": _params("a", "b")}}},
        {
            "if": {"properties": {"family": {"const": "burr"}}},
            "then": {"properties": {"params": _params("a", "b", "tau")}},
        },
        {
            "if": {"properties": {"family": {"const": "student"}}},
            "then": {"properties": {"params": _params("scale", "z")}},
        },
    ],
}

_margins = {"type": "array", "items": MARGIN, "minItems": 1}
_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0}}}

EXACT_CONFIG = {
    "type": "object",
    "properties": {
        "margins": _margins,
        "dependence": _dependence,
        "alpha": _prob,
        "weights": _matrix,
        "tol": _pos,
    },
    "required": ["margins", "alpha"],
    "additionalProperties": False,
}

LIMIT_CONFIG = {
    "type": "object",
    "properties": {
        "model": {"enum": ["indep", "como", "archimedean"]},
        "theta": {"type": "number", "exclusiveMinimum": 1},
        "c": {"type": "array", "items": _pos, "minItems": 1},
        "theta_psi": {"type": "number", "minimum": 1},
        "weights": _matrix,
    },
    "required": ["model", "theta", "c"],
    "additionalProperties": False,
    "if": {"properties": {"model": {"const": "archimedean"}}},
    "then": {"required": ["theta_psi"]},
}

ESTIMATE_CONFIG = {
    "type": "object",
    "properties": {
        "samples": {"type": "string", "minLength": 1},
        "k": _count,
        "alpha": _prob,
        "dependence": _dependence,
        "norm": _norm,
    },
    "required": ["samples", "k", "alpha", "dependence"],
    "additionalProperties": False,
}

SIMULATE_CONFIG = {
    "type": "object",
    "properties": {
        "margins": _margins,
        "dependence": _dependence,
        "n": {"type": "integer", "minimum": 2},
        "master_seed": _seed,
    },
    "required": ["margins", "dependence", "n"],
    "additionalProperties": False,
}

SWEEP_CONFIG = {
    "type": "object",
    "properties": {
        "margins": _margins,
        "dependence": _dependence,
        "alpha_grid": {"type": "array", "items": _prob, "minItems": 1},
        "k_grid": {"type": "array", "items": _count, "minItems": 1},
        "n": {"type": "integer", "minimum": 2},
        "replications": _count,
        "master_seed": _seed,
        "norm": _norm,
    },
    "required": ["margins", "dependence", "alpha_grid", "n"],
    "additionalProperties": False,
}

BOXPLOT_CONFIG = {
    "type": "object",
    "properties": {
        "margins": _margins,
        "dependence": _dependence,
        "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "k_fraction": _prob,
        "k_by_n": {"type": "object", "additionalProperties": _count},
        "replications": _count,
        "master_seed": _seed,
        "norm": _norm,
    },
    "required": ["margins", "dependence", "n_grid"],
    "additionalProperties": False,
}

CONFIG_SCHEMAS = {
    "exact": EXACT_CONFIG,
    "limit": LIMIT_CONFIG,
    "estimate": ESTIMATE_CONFIG,
    "simulate": SIMULATE_CONFIG,
    "sweep": SWEEP_CONFIG,
    "boxplot": BOXPLOT_CONFIG,
}

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}

EXACT_OUTPUT = {
    "type": "object",
    "properties": {"point": _vec, "residual_norm": {"type": "number", "minimum": 0}, "iterations": {"type": "integer"}},
    "required": ["point", "residual_norm", "iterations"],
}

LIMIT_OUTPUT = {
    "type": "object",
    "properties": {
        "eta": _pos,
        "beta": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    },
    "required": ["eta", "beta"],
}

ESTIMATE_OUTPUT = {
    "type": "object",
    "properties": {
        "gamma_hat": _pos,
        "c_hat": {"type": "array", "items": _pos, "minItems": 1},
        "k": _count,
        "expectile": _vec,
        "k_diagnostic": {"type": "number", "minimum": 0},
    },
    "required": ["gamma_hat", "c_hat", "k", "expectile"],
}

FAILURE_OUTPUT = {
    "type": "object",
    "properties": {
        "error": {"type": "string"},
        "message": {"type": "string"},
        "best_point": {"type": ["array", "null"], "items": {"type": "number"}},
        "residual_norm": {"type": ["number", "null"]},
        "iterations": {"type": "integer"},
    },
    "required": ["error", "message"],
}

OUTPUT_SCHEMAS = {"exact": EXACT_OUTPUT, "limit": LIMIT_OUTPUT, "estimate": ESTIMATE_OUTPUT, "failure": FAILURE_OUTPUT}


def validate(instance, schema) -> None:
    """Raise ``jsonschema.ValidationError`` if ``instance`` does not match."""
    jsonschema.Draft202012Validator(schema).validate(instance)
