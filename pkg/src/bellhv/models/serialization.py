"""JSON documents for models (schema tag ``bellhv/1``).

A table-based model is written as::

    {"schema": "bellhv/1", "kind": "M3",
     "tables": {"left_bg": {"outcome": {"name": "l1", "domain": [1, 2]},
                            "conditions": [{"name": "x", "domain": ["a", "a'"]}],
                            "rows": {"x=a": [1.0, 0.0], "x=a'": [0.0, 1.0]}},
                ...}}

The alpha construction can be written compactly as
``{"schema": "bellhv/1", "kind": "alpha", "alphas": [1, 1, 1, 1, 1, 1, 1, 0]}``
with optional ``"selection"`` and ``"unused"`` keys; the spherical models and
the singlet reference carry no parameters.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from ..core import BellError
from .discrete import (
    AlphaConstruction,
    DichotomicM3Model,
    M1Model,
    M2Model,
    SelectionTables,
    SingletReference,
    build_alpha_m3,
)
from .spherical import ContinuousM3Model, HallModel
from .tables import ProbabilityTable

__all__ = ["SCHEMA_TAG", "MODEL_SCHEMA", "SchemaError", "model_to_dict", "model_from_dict", "load_model", "dump_model"]

SCHEMA_TAG = "bellhv/1"


class SchemaError(BellError, ValueError):
    """A document does not follow the ``bellhv/1`` layout."""


_VARIABLE = {
    "type": "object",
    "required": ["name", "domain"],
    "properties": {
        "name": {"type": "string"},
        "domain": {"type": "array", "minItems": 1, "items": {"type": ["string", "integer"]}},
    },
}

_TABLE = {
    "type": "object",
    "required": ["outcome", "rows"],
    "properties": {
        "outcome": _VARIABLE,
        "conditions": {"type": "array", "items": _VARIABLE},
        "rows": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "number"}},
        },
    },
}

MODEL_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["schema", "kind"],
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "kind": {"enum": ["M1", "M2", "M3", "alpha", "hall", "m3c", "quantum"]},
        "tables": {"type": "object", "additionalProperties": _TABLE},
        "alphas": {"type": "array", "minItems": 8, "maxItems": 8, "items": {"type": "number"}},
        "unused": {"type": "number"},
        "selection": {
            "type": "object",
            "properties": {
                "left": {"type": "object", "additionalProperties": {"type": "integer"}},
                "right": {"type": "object", "additionalProperties": {"type": "integer"}},
                "xi": {"type": "object", "additionalProperties": {"type": "integer"}},
            },
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["M1", "M2", "M3"]}}}, "then": {"required": ["tables"]}},
        {"if": {"properties": {"kind": {"const": "alpha"}}}, "then": {"required": ["alphas"]}},
    ],
}

_TABLE_NAMES = {
    "M1": ("prior", "left", "right"),
    "M2": ("left_bg", "right_bg", "left", "right"),
    "M3": ("left_bg", "right_bg", "xi", "left", "right"),
}
_CLASSES = {"M1": M1Model, "M2": M2Model, "M3": DichotomicM3Model}


def _xi_key(text: str) -> tuple[int, int]:
    # "l1=1,l2=2" or "1,2"
    parts = [p.split("=")[-1] for p in text.split(",")]
    return int(parts[0]), int(parts[1])


def model_to_dict(model) -> dict:
    if isinstance(model, AlphaConstruction):
        sel = model.selection
        return {
            "schema": SCHEMA_TAG,
            "kind": "alpha",
            "alphas": list(model.alphas),
            "unused": model.unused,
            "selection": {
                "left": dict(sel.left),
                "right": dict(sel.right),
                "xi": {f"l1={k[0]},l2={k[1]}": v for k, v in sel.xi.items()},
            },
        }
    if isinstance(model, (HallModel, ContinuousM3Model, SingletReference)):
        return {"schema": SCHEMA_TAG, "kind": model.kind}
    if isinstance(model, (M1Model, M2Model, DichotomicM3Model)):
        return {
            "schema": SCHEMA_TAG,
            "kind": model.kind,
            "tables": {name: table.to_dict() for name, table in model.tables().items()},
        }
    raise SchemaError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: Mapping, *, validate=True, build_alpha=False):
    """Inverse of :func:`model_to_dict`.

    Structural problems raise :class:`SchemaError`; numerical problems (for
    example a row that does not sum to one) raise
    :class:`~bellhv.core.ValidationError` unless ``validate`` is false.
    With ``build_alpha`` an alpha document is returned as the built
    :class:`DichotomicM3Model` rather than the construction.
    """
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"invalid model document: {exc.message}") from None
    kind = doc["kind"]
    if kind == "alpha":
        kwargs = {"alphas": tuple(doc["alphas"])}
        if "unused" in doc:
            kwargs["unused"] = doc["unused"]
        if "selection" in doc:
            sel = doc["selection"]
            default = SelectionTables.standard()
            kwargs["selection"] = SelectionTables(
                left=dict(sel.get("left", default.left)),
                right=dict(sel.get("right", default.right)),
                xi={_xi_key(k): v for k, v in sel["xi"].items()} if "xi" in sel else dict(default.xi),
            )
        construction = AlphaConstruction(**kwargs)
        return build_alpha_m3(construction) if build_alpha else construction
    if kind == "hall":
        return HallModel()
    if kind == "m3c":
        return ContinuousM3Model()
    if kind == "quantum":
        return SingletReference()
    names = _TABLE_NAMES[kind]
    tables = doc["tables"]
    missing = [n for n in names if n not in tables]
    if missing:
        raise SchemaError(f"{kind} model is missing tables {missing}")
    try:
        parsed = [ProbabilityTable.from_dict(tables[n], validate=False) for n in names]
        model = _CLASSES[kind](*parsed)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed {kind} tables: {exc}") from None
    if validate:
        for table in parsed:
            table.validate()
    return model


def dump_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path, **kwargs):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")), **kwargs)
