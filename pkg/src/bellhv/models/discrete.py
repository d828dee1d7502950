"""Finite hidden-variable models with exact joint evaluation.

Three correlation graphs are covered:

* :class:`M1Model` -- Bell's model, one hidden variable ``lam`` with a
  setting-independent prior.
* :class:`M2Model` -- a background variable on each wing (``l1``, ``l2``),
  each influenced by its own analyzer setting.
* :class:`DichotomicM3Model` -- the M2 background plus a pair variable ``xi``
  correlated with both background variables.

Outcome variables ``s1``/``s2`` have domain ``(1, -1)``, so the first entry of
every outcome row is the probability of +1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from ..core import BellError, JointOutcomeDistribution, ValidationError, quantum_joint_distribution
from .tables import ProbabilityTable, Variable

__all__ = [
    "OUTCOMES",
    "LEFT_SETTINGS",
    "RIGHT_SETTINGS",
    "ALPHA_PAIRS",
    "ConstructionError",
    "M1Model",
    "M2Model",
    "DichotomicM3Model",
    "SelectionTables",
    "AlphaConstruction",
    "SingletReference",
    "m1_joint",
    "m2_joint",
    "m3_joint",
    "build_alpha_m3",
    "mi_ratio",
    "is_indeterminate",
]

OUTCOMES = (1, -1)
BINARY = (1, 2)
LEFT_SETTINGS = ("a", "a'")
RIGHT_SETTINGS = ("b", "b'")
# setting pairs in the order the eight alphas are assigned: (alpha1, alpha2) -> (a, b), ...
ALPHA_PAIRS = (("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'"))


class ConstructionError(BellError, ValueError):
    """Selection tables cannot carry independent alphas for all four setting pairs."""


def _check_table(table: ProbabilityTable, outcome: str, conditions: tuple[str, ...]):
    if table.outcome.name != outcome or table.condition_names != conditions:
        want = f"{outcome}|{','.join(conditions)}" if conditions else outcome
        raise ValidationError(f"expected table {want}, got {table.name}")


def _same_var(*variables: Variable):
    first = variables[0]
    for v in variables[1:]:
        if v != first:
            raise ValidationError(f"variable {first.name!r} has inconsistent domains: {first.domain} vs {v.domain}")


def _outcome_var(name: str) -> Variable:
    return Variable(name, OUTCOMES)


def _sample_rows(rng: np.random.Generator, rows: np.ndarray) -> np.ndarray:
    """One categorical index per row of ``rows`` (shape (n, k))."""
    cdf = np.cumsum(rows, axis=1)
    u = rng.random(rows.shape[0])
    idx = (u[:, None] >= cdf).sum(axis=1)
    return np.minimum(idx, rows.shape[1] - 1)


def _sample_signs(rng: np.random.Generator, p_plus: np.ndarray) -> np.ndarray:
    return np.where(rng.random(p_plus.shape[0]) < p_plus, 1, -1).astype(np.int8)


class _DiscreteModel:
    kind = ""

    def tables(self) -> dict[str, ProbabilityTable]:
        raise NotImplementedError

    def joint_array(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def joint(self, x, y) -> JointOutcomeDistribution:
        return JointOutcomeDistribution.from_array(self.joint_array(x, y))

    def correlation(self, x, y) -> float:
        p = self.joint_array(x, y)
        return float(2.0 * (p[0, 0] + p[1, 1]) - 1.0)

    @property
    def left_settings(self) -> tuple:
        raise NotImplementedError

    @property
    def right_settings(self) -> tuple:
        raise NotImplementedError

    def correlation_matrix(self) -> np.ndarray:
        """Correlators for every (left setting, right setting) pair of the model's domains."""
        return np.array([[self.correlation(x, y) for y in self.right_settings] for x in self.left_settings])

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self.tables() == other.tables()

    __hash__ = None


class M1Model(_DiscreteModel):
    """Bell's model: P(s1,s2|x,y) = sum_lam P(s1|x,lam) P(s2|y,lam) P(lam)."""

    kind = "M1"

    def __init__(self, prior: ProbabilityTable, left_table: ProbabilityTable, right_table: ProbabilityTable):
        _check_table(prior, "lam", ())
        _check_table(left_table, "s1", ("x", "lam"))
        _check_table(right_table, "s2", ("y", "lam"))
        _same_var(prior.outcome, left_table.conditions[1], right_table.conditions[1])
        self.prior = prior
        self.left_table = left_table
        self.right_table = right_table

    @classmethod
    def from_arrays(cls, prior, left, right, *, left_settings=LEFT_SETTINGS, right_settings=RIGHT_SETTINGS,
                    lambda_support=None, validate=True) -> "M1Model":
        """``left[x, lam, s1]`` and ``right[y, lam, s2]`` with outcome order (+1, -1)."""
        prior = np.asarray(prior, dtype=float)
        support = tuple(lambda_support) if lambda_support is not None else tuple(range(1, prior.size + 1))
        lam = Variable("lam", support)
        return cls(
            ProbabilityTable(lam, (), prior, validate=validate),
            ProbabilityTable(_outcome_var("s1"), (Variable("x", left_settings), lam), left, validate=validate),
            ProbabilityTable(_outcome_var("s2"), (Variable("y", right_settings), lam), right, validate=validate),
        )

    @property
    def lambda_support(self) -> tuple:
        return self.prior.outcome.domain

    @property
    def left_settings(self):
        return self.left_table.conditions[0].domain

    @property
    def right_settings(self):
        return self.right_table.conditions[0].domain

    def tables(self):
        return {"prior": self.prior, "left": self.left_table, "right": self.right_table}

    def joint_array(self, x, y):
        xi = self.left_table.conditions[0].index(x)
        yi = self.right_table.conditions[0].index(y)
        return np.einsum("l,li,lj->ij", self.prior.values, self.left_table.values[xi], self.right_table.values[yi])

    def correlation_matrix(self):
        p = np.einsum("l,xli,ylj->xyij", self.prior.values, self.left_table.values, self.right_table.values)
        return 2.0 * (p[..., 0, 0] + p[..., 1, 1]) - 1.0

    def sample_outcomes(self, rng, x, y, size):
        xi = self.left_table.conditions[0].index(x)
        yi = self.right_table.conditions[0].index(y)
        lam = _sample_rows(rng, np.broadcast_to(self.prior.values, (size, self.prior.values.size)))
        s1 = _sample_signs(rng, self.left_table.values[xi, lam, 0])
        s2 = _sample_signs(rng, self.right_table.values[yi, lam, 0])
        return s1, s2


class M2Model(_DiscreteModel):
    """Naive background model: sum over l1, l2 of P(s1|x,l1) P(s2|y,l2) P(l1|x) P(l2|y)."""

    kind = "M2"

    def __init__(self, left_bg_table, right_bg_table, left_table, right_table):
        _check_table(left_bg_table, "l1", ("x",))
        _check_table(right_bg_table, "l2", ("y",))
        _check_table(left_table, "s1", ("x", "l1"))
        _check_table(right_table, "s2", ("y", "l2"))
        _same_var(left_bg_table.conditions[0], left_table.conditions[0])
        _same_var(right_bg_table.conditions[0], right_table.conditions[0])
        _same_var(left_bg_table.outcome, left_table.conditions[1])
        _same_var(right_bg_table.outcome, right_table.conditions[1])
        self.left_bg_table = left_bg_table
        self.right_bg_table = right_bg_table
        self.left_table = left_table
        self.right_table = right_table

    @classmethod
    def from_arrays(cls, left_bg, right_bg, left, right, *, left_settings=LEFT_SETTINGS,
                    right_settings=RIGHT_SETTINGS, validate=True) -> "M2Model":
        left_bg = np.asarray(left_bg, dtype=float)
        right_bg = np.asarray(right_bg, dtype=float)
        x = Variable("x", left_settings)
        y = Variable("y", right_settings)
        l1 = Variable("l1", tuple(range(1, left_bg.shape[1] + 1)))
        l2 = Variable("l2", tuple(range(1, right_bg.shape[1] + 1)))
        return cls(
            ProbabilityTable(l1, (x,), left_bg, validate=validate),
            ProbabilityTable(l2, (y,), right_bg, validate=validate),
            ProbabilityTable(_outcome_var("s1"), (x, l1), left, validate=validate),
            ProbabilityTable(_outcome_var("s2"), (y, l2), right, validate=validate),
        )

    @property
    def left_settings(self):
        return self.left_bg_table.conditions[0].domain

    @property
    def right_settings(self):
        return self.right_bg_table.conditions[0].domain

    def tables(self):
        return {
            "left_bg": self.left_bg_table,
            "right_bg": self.right_bg_table,
            "left": self.left_table,
            "right": self.right_table,
        }

    def joint_array(self, x, y):
        xi = self.left_bg_table.conditions[0].index(x)
        yi = self.right_bg_table.conditions[0].index(y)
        return np.einsum(
            "a,b,ai,bj->ij",
            self.left_bg_table.values[xi],
            self.right_bg_table.values[yi],
            self.left_table.values[xi],
            self.right_table.values[yi],
        )

    def marginals(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """P(s1|x) and P(s2|y) with the background summed out."""
        xi = self.left_bg_table.conditions[0].index(x)
        yi = self.right_bg_table.conditions[0].index(y)
        left = self.left_bg_table.values[xi] @ self.left_table.values[xi]
        right = self.right_bg_table.values[yi] @ self.right_table.values[yi]
        return left, right

    def correlation_matrix(self):
        left = np.einsum("xa,xai->xi", self.left_bg_table.values, self.left_table.values)
        right = np.einsum("yb,ybj->yj", self.right_bg_table.values, self.right_table.values)
        p = np.einsum("xi,yj->xyij", left, right)
        return 2.0 * (p[..., 0, 0] + p[..., 1, 1]) - 1.0

    def sample_outcomes(self, rng, x, y, size):
        xi = self.left_bg_table.conditions[0].index(x)
        yi = self.right_bg_table.conditions[0].index(y)
        bg1 = self.left_bg_table.values[xi]
        bg2 = self.right_bg_table.values[yi]
        l1 = _sample_rows(rng, np.broadcast_to(bg1, (size, bg1.size)))
        l2 = _sample_rows(rng, np.broadcast_to(bg2, (size, bg2.size)))
        s1 = _sample_signs(rng, self.left_table.values[xi, l1, 0])
        s2 = _sample_signs(rng, self.right_table.values[yi, l2, 0])
        return s1, s2


class DichotomicM3Model(_DiscreteModel):
    """Background model with a pair variable; l1, l2 and xi each take values 1 and 2.

    P(s1,s2|x,y) = sum over (l1, l2, xi) of
    P(s1|xi,l1,x) P(s2|xi,l2,y) P(xi|l1,l2) P(l1|x) P(l2|y).
    """

    kind = "M3"

    def __init__(self, left_bg_table, right_bg_table, xi_table, left_table, right_table):
        _check_table(left_bg_table, "l1", ("x",))
        _check_table(right_bg_table, "l2", ("y",))
        _check_table(xi_table, "xi", ("l1", "l2"))
        _check_table(left_table, "s1", ("xi", "l1", "x"))
        _check_table(right_table, "s2", ("xi", "l2", "y"))
        for var in (left_bg_table.outcome, right_bg_table.outcome, xi_table.outcome):
            if var.domain != BINARY:
                raise ValidationError(f"hidden variable {var.name!r} must range over {BINARY}, got {var.domain}")
        _same_var(left_bg_table.outcome, xi_table.conditions[0], left_table.conditions[1])
        _same_var(right_bg_table.outcome, xi_table.conditions[1], right_table.conditions[1])
        _same_var(xi_table.outcome, left_table.conditions[0], right_table.conditions[0])
        _same_var(left_bg_table.conditions[0], left_table.conditions[2])
        _same_var(right_bg_table.conditions[0], right_table.conditions[2])
        self.left_bg_table = left_bg_table
        self.right_bg_table = right_bg_table
        self.xi_table = xi_table
        self.left_table = left_table
        self.right_table = right_table

    @classmethod
    def from_arrays(cls, left_bg, right_bg, xi, left, right, *, left_settings=LEFT_SETTINGS,
                    right_settings=RIGHT_SETTINGS, validate=True) -> "DichotomicM3Model":
        """Arrays indexed ``left_bg[x, l1]``, ``xi[l1, l2, xi]``, ``left[xi, l1, x, s1]`` and so on."""
        x = Variable("x", left_settings)
        y = Variable("y", right_settings)
        l1 = Variable("l1", BINARY)
        l2 = Variable("l2", BINARY)
        k = Variable("xi", BINARY)
        return cls(
            ProbabilityTable(l1, (x,), left_bg, validate=validate),
            ProbabilityTable(l2, (y,), right_bg, validate=validate),
            ProbabilityTable(k, (l1, l2), xi, validate=validate),
            ProbabilityTable(_outcome_var("s1"), (k, l1, x), left, validate=validate),
            ProbabilityTable(_outcome_var("s2"), (k, l2, y), right, validate=validate),
        )

    @property
    def left_settings(self):
        return self.left_bg_table.conditions[0].domain

    @property
    def right_settings(self):
        return self.right_bg_table.conditions[0].domain

    def tables(self):
        return {
            "left_bg": self.left_bg_table,
            "right_bg": self.right_bg_table,
            "xi": self.xi_table,
            "left": self.left_table,
            "right": self.right_table,
        }

    def replace(self, **tables) -> "DichotomicM3Model":
        current = self.tables()
        unknown = set(tables) - set(current)
        if unknown:
            raise ValidationError(f"unknown tables {sorted(unknown)}")
        current.update(tables)
        return DichotomicM3Model(
            current["left_bg"], current["right_bg"], current["xi"], current["left"], current["right"]
        )

    def joint_array(self, x, y):
        xi = self.left_bg_table.conditions[0].index(x)
        yi = self.right_bg_table.conditions[0].index(y)
        return np.einsum(
            "a,b,abk,kai,kbj->ij",
            self.left_bg_table.values[xi],
            self.right_bg_table.values[yi],
            self.xi_table.values,
            self.left_table.values[:, :, xi],
            self.right_table.values[:, :, yi],
        )

    def sample_outcomes(self, rng, x, y, size):
        xi = self.left_bg_table.conditions[0].index(x)
        yi = self.right_bg_table.conditions[0].index(y)
        bg1 = self.left_bg_table.values[xi]
        bg2 = self.right_bg_table.values[yi]
        l1 = _sample_rows(rng, np.broadcast_to(bg1, (size, 2)))
        l2 = _sample_rows(rng, np.broadcast_to(bg2, (size, 2)))
        k = _sample_rows(rng, self.xi_table.values[l1, l2])
        s1 = _sample_signs(rng, self.left_table.values[k, l1, xi, 0])
        s2 = _sample_signs(rng, self.right_table.values[k, l2, yi, 0])
        return s1, s2


def m1_joint(m: M1Model, a, b) -> JointOutcomeDistribution:
    return m.joint(a, b)


def m2_joint(m: M2Model, a, b) -> JointOutcomeDistribution:
    return m.joint(a, b)


def m3_joint(m: DichotomicM3Model, x, y) -> JointOutcomeDistribution:
    return m.joint(x, y)


@dataclass(frozen=True)
class SelectionTables:
    """Deterministic background and pair-variable choices.

    ``left[x]`` is the l1 value selected by setting x, ``right[y]`` the l2
    value, and ``xi[(l1, l2)]`` the pair value. :meth:`standard` completes the
    fixed choices P(1|a) = P(1|b) = P(1|1,1) = 1 and P(2|b') = P(2|1,2) = 1
    with the only assignment that keeps all four left and right triples distinct.
    """

    left: Mapping[str, int] = field(default_factory=lambda: {"a": 1, "a'": 2})
    right: Mapping[str, int] = field(default_factory=lambda: {"b": 1, "b'": 2})
    xi: Mapping[tuple, int] = field(
        default_factory=lambda: {(1, 1): 1, (1, 2): 2, (2, 1): 2, (2, 2): 1}
    )

    def __post_init__(self):
        if set(self.left) != set(LEFT_SETTINGS) or set(self.right) != set(RIGHT_SETTINGS):
            raise ConstructionError("selection must assign every setting of a, a', b, b'")
        if set(self.xi) != set(itertools.product(BINARY, BINARY)):
            raise ConstructionError("xi selection must cover every (l1, l2) pair")
        for v in (*self.left.values(), *self.right.values(), *self.xi.values()):
            if v not in BINARY:
                raise ConstructionError(f"selected values must be 1 or 2, got {v!r}")
        lefts, rights = zip(*self.triples())
        if len(set(lefts)) != 4 or len(set(rights)) != 4:
            raise ConstructionError(
                f"selection does not give distinct (xi, l1, x) and (xi, l2, y) triples: {lefts} / {rights}"
            )

    @classmethod
    def standard(cls) -> "SelectionTables":
        return cls()

    def triples(self) -> list[tuple[tuple, tuple]]:
        """((xi, l1, x), (xi, l2, y)) reached by each pair in :data:`ALPHA_PAIRS`."""
        out = []
        for x, y in ALPHA_PAIRS:
            l1, l2 = self.left[x], self.right[y]
            k = self.xi[(l1, l2)]
            out.append(((k, l1, x), (k, l2, y)))
        return out


@dataclass(frozen=True)
class AlphaConstruction:
    """Eight outcome probabilities placed on the triples reached by the selection tables.

    ``alphas[2i]`` is P(s1=+1|triple) and ``alphas[2i+1]`` is P(s2=+1|triple)
    for the i-th pair of :data:`ALPHA_PAIRS`. Outcome rows of triples that no
    pair reaches are filled with ``unused`` (only relevant once the background
    tables are mixed, as in the decoupling scan).
    """

    alphas: tuple = (1, 1, 1, 1, 1, 1, 1, 0)
    selection: SelectionTables = field(default_factory=SelectionTables.standard)
    unused: float = 0.5

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if len(alphas) != 8:
            raise ConstructionError(f"need 8 alphas, got {len(alphas)}")
        if any(not (0.0 <= a <= 1.0) for a in alphas) or not (0.0 <= self.unused <= 1.0):
            raise ConstructionError("alphas must lie in [0, 1]")
        object.__setattr__(self, "alphas", alphas)


def build_alpha_m3(c: AlphaConstruction) -> DichotomicM3Model:
    sel = c.selection
    left_bg = np.array([[1.0 if sel.left[x] == v else 0.0 for v in BINARY] for x in LEFT_SETTINGS])
    right_bg = np.array([[1.0 if sel.right[y] == v else 0.0 for v in BINARY] for y in RIGHT_SETTINGS])
    xi = np.zeros((2, 2, 2))
    for (l1, l2), k in sel.xi.items():
        xi[l1 - 1, l2 - 1, k - 1] = 1.0

    left_plus = np.full((2, 2, 2), c.unused)
    right_plus = np.full((2, 2, 2), c.unused)
    for i, ((kl, l1, x), (kr, l2, y)) in enumerate(sel.triples()):
        left_plus[kl - 1, l1 - 1, LEFT_SETTINGS.index(x)] = c.alphas[2 * i]
        right_plus[kr - 1, l2 - 1, RIGHT_SETTINGS.index(y)] = c.alphas[2 * i + 1]
    left = np.stack([left_plus, 1.0 - left_plus], axis=-1)
    right = np.stack([right_plus, 1.0 - right_plus], axis=-1)
    return DichotomicM3Model.from_arrays(left_bg, right_bg, xi, left, right)


@dataclass(frozen=True)
class SingletReference:
    """Closed-form singlet statistics over planar settings; exposed for side-by-side runs."""

    kind = "quantum"

    def joint(self, a, b) -> JointOutcomeDistribution:
        return quantum_joint_distribution(a, b)

    def correlation(self, a, b) -> float:
        return self.joint(a, b).correlation


INDETERMINATE = math.nan


def is_indeterminate(ratio: float) -> bool:
    """True for the 0/0 marker returned by :func:`mi_ratio`."""
    return math.isnan(ratio)


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return math.inf if num > 0.0 else INDETERMINATE
    return num / den


def mi_ratio(m, hidden: Sequence[Hashable], x, y, x_prime, y_prime) -> float:
    """P(hidden | x, y) / P(hidden | x', y').

    ``hidden`` is ``(lam,)`` for M1, ``(l1, l2)`` for M2 and ``(l1, l2, xi)``
    for M3. For M3 the pair-variable factor P(xi|l1,l2) is common to both
    settings and cancels, leaving P(l1|x) P(l2|y) / P(l1|x') P(l2|y').

    Returns ``inf`` when only the denominator vanishes and ``nan`` (see
    :func:`is_indeterminate`) when both do.
    """
    hidden = tuple(hidden)
    if isinstance(m, M1Model):
        (lam,) = hidden
        for s, dom in ((x, m.left_settings), (x_prime, m.left_settings), (y, m.right_settings),
                       (y_prime, m.right_settings)):
            if s not in dom:
                raise ValidationError(f"unknown setting {s!r}")
        p = m.prior.prob(lam)
        return _ratio(p, p)
    if isinstance(m, DichotomicM3Model):
        l1, l2, k = hidden
        m.xi_table.outcome.index(k)
    elif isinstance(m, M2Model):
        l1, l2 = hidden
    else:
        raise ValidationError(f"no measurement-independence ratio for {type(m).__name__}")
    num = m.left_bg_table.prob(l1, x) * m.right_bg_table.prob(l2, y)
    den = m.left_bg_table.prob(l1, x_prime) * m.right_bg_table.prob(l2, y_prime)
    return _ratio(num, den)


def hidden_tuples(m) -> list[tuple]:
    """All hidden-variable tuples accepted by :func:`mi_ratio` for ``m``."""
    if isinstance(m, M1Model):
        return [(lam,) for lam in m.lambda_support]
    l1 = m.left_bg_table.outcome.domain
    l2 = m.right_bg_table.outcome.domain
    if isinstance(m, DichotomicM3Model):
        return list(itertools.product(l1, l2, m.xi_table.outcome.domain))
    return list(itertools.product(l1, l2))
