"""Conditional probability tables over small discrete domains."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator, Mapping, Sequence

import numpy as np

from ..core import PROB_TOL, ValidationError

__all__ = ["Variable", "ProbabilityTable"]


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with an ordered domain."""

    name: str
    domain: tuple

    def __post_init__(self):
        domain = tuple(self.domain)
        if not domain:
            raise ValidationError(f"variable {self.name!r} has an empty domain")
        if len({str(v) for v in domain}) != len(domain):
            raise ValidationError(f"domain of {self.name!r} has values with clashing string forms")
        object.__setattr__(self, "domain", domain)

    @property
    def cardinality(self) -> int:
        return len(self.domain)

    def index(self, value: Hashable) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise ValidationError(f"{value!r} not in domain of {self.name!r}: {self.domain}") from None

    def parse(self, text: str) -> Hashable:
        for v in self.domain:
            if str(v) == text:
                return v
        raise ValidationError(f"{text!r} not in domain of {self.name!r}: {self.domain}")

    def to_dict(self) -> dict:
        return {"name": self.name, "domain": list(self.domain)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Variable":
        return cls(d["name"], tuple(d["domain"]))


class ProbabilityTable:
    """P(outcome | conditions) stored as a dense array.

    ``values`` has shape ``(*condition cardinalities, outcome cardinality)``.
    Rows are checked for range and normalization at construction unless
    ``validate=False``, which exists so that deliberately faulty tables can
    be built and then caught by :func:`bellhv.analysis.normalization_audit`.
    """

    def __init__(self, outcome: Variable, conditions: Sequence[Variable], values, *, validate=True):
        self.outcome = outcome
        self.conditions = tuple(conditions)
        arr = np.array(values, dtype=float)
        shape = tuple(c.cardinality for c in self.conditions) + (outcome.cardinality,)
        if arr.shape != shape:
            raise ValidationError(f"table {self.name}: values have shape {arr.shape}, expected {shape}")
        arr.flags.writeable = False
        self.values = arr
        if validate:
            self.validate()

    @property
    def name(self) -> str:
        cond = ",".join(c.name for c in self.conditions)
        return f"{self.outcome.name}|{cond}" if cond else self.outcome.name

    @property
    def condition_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.conditions)

    def validate(self) -> None:
        if np.any(self.values < -PROB_TOL) or np.any(self.values > 1.0 + PROB_TOL):
            raise ValidationError(f"table {self.name}: entries outside [0, 1]")
        residuals = self.residuals()
        worst = max(residuals.values())
        if worst > PROB_TOL:
            key = max(residuals, key=residuals.get)
            raise ValidationError(f"table {self.name}: row {key!r} off by {worst:.3e}")

    @classmethod
    def from_rows(cls, outcome: Variable, conditions: Sequence[Variable], rows: Mapping, *, validate=True):
        """Build from ``{conditioning tuple: outcome probabilities}``; every tuple must be present."""
        conditions = tuple(conditions)
        shape = tuple(c.cardinality for c in conditions) + (outcome.cardinality,)
        values = np.full(shape, np.nan)
        for key, row in rows.items():
            key = key if isinstance(key, tuple) else (key,)
            idx = tuple(c.index(v) for c, v in zip(conditions, key, strict=True))
            values[idx] = row
        if np.isnan(values).any():
            raise ValidationError("missing rows for some conditioning tuples")
        return cls(outcome, conditions, values, validate=validate)

    @classmethod
    def from_function(cls, outcome: Variable, conditions: Sequence[Variable], fn: Callable, *, validate=True):
        """``fn(*conditioning values)`` returns the outcome probabilities of that row."""
        rows = {key: fn(*key) for key in itertools.product(*(c.domain for c in conditions))}
        return cls.from_rows(outcome, conditions, rows, validate=validate)

    @classmethod
    def deterministic(cls, outcome: Variable, conditions: Sequence[Variable], choice: Callable):
        """0/1 table putting all mass on ``choice(*conditioning values)``."""

        def row(*key):
            out = np.zeros(outcome.cardinality)
            out[outcome.index(choice(*key))] = 1.0
            return out

        return cls.from_function(outcome, conditions, row)

    def keys(self) -> Iterator[tuple]:
        return itertools.product(*(c.domain for c in self.conditions))

    def key_string(self, key: tuple) -> str:
        return ",".join(f"{c.name}={v}" for c, v in zip(self.conditions, key))

    def parse_key(self, text: str) -> tuple:
        parts = [p for p in text.split(",") if p] if text else []
        if len(parts) != len(self.conditions):
            raise ValidationError(f"table {self.name}: bad row key {text!r}")
        key = []
        for cond, part in zip(self.conditions, parts):
            name, _, value = part.partition("=")
            if name.strip() != cond.name:
                raise ValidationError(f"table {self.name}: expected {cond.name!r} in key {text!r}")
            key.append(cond.parse(value.strip()))
        return tuple(key)

    def index(self, *key) -> tuple[int, ...]:
        return tuple(c.index(v) for c, v in zip(self.conditions, key, strict=True))

    def row(self, *key) -> np.ndarray:
        return self.values[self.index(*key)]

    def prob(self, value, *key) -> float:
        return float(self.row(*key)[self.outcome.index(value)])

    def residuals(self) -> dict[str, float]:
        """|row sum - 1| per conditioning tuple."""
        sums = self.values.sum(axis=-1)
        return {self.key_string(k): abs(float(sums[self.index(*k)]) - 1.0) for k in self.keys()}

    def replace(self, values, *, validate=True) -> "ProbabilityTable":
        return ProbabilityTable(self.outcome, self.conditions, values, validate=validate)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.to_dict(),
            "conditions": [c.to_dict() for c in self.conditions],
            "rows": {self.key_string(k): [float(p) for p in self.row(*k)] for k in self.keys()},
        }

    @classmethod
    def from_dict(cls, d: Mapping, *, validate=True) -> "ProbabilityTable":
        outcome = Variable.from_dict(d["outcome"])
        conditions = [Variable.from_dict(c) for c in d.get("conditions", [])]
        probe = cls(outcome, conditions, np.zeros(tuple(c.cardinality for c in conditions) + (outcome.cardinality,)),
                    validate=False)
        rows = {probe.parse_key(k): v for k, v in d["rows"].items()}
        return cls.from_rows(outcome, conditions, rows, validate=validate)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityTable):
            return NotImplemented
        return (
            self.outcome == other.outcome
            and self.conditions == other.conditions
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"ProbabilityTable({self.name}, shape={self.values.shape})"
