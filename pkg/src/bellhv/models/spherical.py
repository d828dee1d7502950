"""Models whose settings and hidden variables live on the unit sphere.

:class:`HallModel` correlates the pair variable directly with both settings.
:class:`ContinuousM3Model` places background vectors l1, l2 at the analyzers
(delta distributions) and correlates the pair vector xi with them; once l1 and
l2 are projected onto the settings its outcome functions and density coincide
with Hall's.

Scalar functions take :class:`~bellhv.core.UnitVector3` (or planar settings);
the ``*_array`` variants take ``(n, 3)`` arrays of hidden-variable vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import JointOutcomeDistribution, Outcome, UnitVector3, ValidationError, as_vector
from ..streams import McEstimate, SeededStream, biased_sphere, map_chunks, reduce_in_order, sign, uniform_sphere

__all__ = [
    "HallModel",
    "ContinuousM3Model",
    "IntegrationSpec",
    "JointEstimate",
    "hall_outcome_a",
    "hall_outcome_b",
    "hall_density",
    "m3c_outcome_a",
    "m3c_outcome_b",
    "m3c_density",
    "m3c_joint",
    "biased_density_array",
    "MIN_SAMPLES",
]

MIN_SAMPLES = 1000


def _vec(v) -> np.ndarray:
    return as_vector(v).as_array()


def biased_density_array(points, u, w) -> np.ndarray:
    """Density at each row of ``points`` that favours sign agreement with ``u`` and ``w``.

    (1 + u.w) / (8 (pi - phi)) where sgn(u.p) = sgn(w.p), else
    (1 - u.w) / (8 phi), phi being the angle between u and w. A region whose
    denominator vanishes gets density zero.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    cos_uw, phi = _cos_angle(as_vector(u), as_vector(w))
    u = _vec(u)
    w = _vec(w)
    agree_den = 8.0 * (math.pi - phi)
    disagree_den = 8.0 * phi
    agree_val = (1.0 + cos_uw) / agree_den if agree_den > 0.0 else 0.0
    disagree_val = (1.0 - cos_uw) / disagree_den if disagree_den > 0.0 else 0.0
    agree = sign(points @ u) == sign(points @ w)
    return np.where(agree, agree_val, disagree_val)


def hall_outcome_a_array(lam, a) -> np.ndarray:
    return sign(np.atleast_2d(lam) @ _vec(a))


def hall_outcome_b_array(lam, b) -> np.ndarray:
    return -sign(np.atleast_2d(lam) @ _vec(b))


def m3c_outcome_a_array(xi, l1, a) -> np.ndarray:
    a = _vec(a)
    return (sign(np.dot(_vec(l1), a)) * sign(np.atleast_2d(xi) @ a)).astype(np.int8)


def m3c_outcome_b_array(xi, l2, b) -> np.ndarray:
    b = _vec(b)
    return (-sign(np.dot(_vec(l2), b)) * sign(np.atleast_2d(xi) @ b)).astype(np.int8)


def _dot(u, v) -> float:
    return u.x * v.x + u.y * v.y + u.z * v.z


def _sgn(x: float) -> int:
    return 1 if x >= 0.0 else -1


def _cos_angle(u, w) -> tuple[float, float]:
    # atan2 of cross and dot stays accurate near 0 and pi, where acos loses half the digits
    cx = u.y * w.z - u.z * w.y
    cy = u.z * w.x - u.x * w.z
    cz = u.x * w.y - u.y * w.x
    dot = _dot(u, w)
    phi = math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), dot)
    return min(1.0, max(-1.0, dot)), phi


def _biased_density(p: UnitVector3, u: UnitVector3, w: UnitVector3) -> float:
    cos_uw, phi = _cos_angle(u, w)
    if _sgn(_dot(u, p)) == _sgn(_dot(w, p)):
        den = 8.0 * (math.pi - phi)
        return (1.0 + cos_uw) / den if den > 0.0 else 0.0
    den = 8.0 * phi
    return (1.0 - cos_uw) / den if den > 0.0 else 0.0


def hall_outcome_a(lam, a) -> Outcome:
    """sgn(a . lam), with sgn(0) = +1."""
    return Outcome(_sgn(_dot(as_vector(a), as_vector(lam))))


def hall_outcome_b(lam, b) -> Outcome:
    """-sgn(b . lam), with sgn(0) = +1."""
    return Outcome(-_sgn(_dot(as_vector(b), as_vector(lam))))


def hall_density(lam, a, b) -> float:
    return _biased_density(as_vector(lam), as_vector(a), as_vector(b))


def m3c_outcome_a(xi, l1, a) -> Outcome:
    """sgn(a . l1) sgn(a . xi)."""
    a = as_vector(a)
    return Outcome(_sgn(_dot(a, as_vector(l1))) * _sgn(_dot(a, as_vector(xi))))


def m3c_outcome_b(xi, l2, b) -> Outcome:
    """-sgn(b . l2) sgn(b . xi)."""
    b = as_vector(b)
    return Outcome(-_sgn(_dot(b, as_vector(l2))) * _sgn(_dot(b, as_vector(xi))))


def m3c_density(xi, l1, l2) -> float:
    """Density of the pair vector given the two background vectors."""
    return _biased_density(as_vector(xi), as_vector(l1), as_vector(l2))


# uppercase names as used in the model descriptions
hall_outcome_A = hall_outcome_a
hall_outcome_B = hall_outcome_b
m3c_outcome_A = m3c_outcome_a
m3c_outcome_B = m3c_outcome_b


@dataclass(frozen=True)
class HallModel:
    """Deterministic sign outcomes with a setting-dependent density for the pair vector."""

    kind = "hall"

    def outcome_a(self, lam, a):
        return hall_outcome_a_array(lam, a)

    def outcome_b(self, lam, b):
        return hall_outcome_b_array(lam, b)

    def density(self, lam, a, b):
        return biased_density_array(lam, a, b)

    def sample_hidden(self, rng, a, b, size) -> np.ndarray:
        return biased_sphere(rng, a, b, size)

    def sample_outcomes(self, rng, a, b, size):
        lam = self.sample_hidden(rng, a, b, size)
        return self.outcome_a(lam, a), self.outcome_b(lam, b)


@dataclass(frozen=True)
class ContinuousM3Model:
    """Background vectors fixed at the settings (l1 = a, l2 = b), pair vector drawn from its density."""

    kind = "m3c"

    def outcome_a(self, xi, l1, a):
        return m3c_outcome_a_array(xi, l1, a)

    def outcome_b(self, xi, l2, b):
        return m3c_outcome_b_array(xi, l2, b)

    def density(self, xi, l1, l2):
        return biased_density_array(xi, l1, l2)

    def sample_hidden(self, rng, a, b, size) -> np.ndarray:
        # l1, l2 are delta-distributed at a, b; only xi is random
        return biased_sphere(rng, a, b, size)

    def sample_outcomes(self, rng, a, b, size):
        xi = self.sample_hidden(rng, a, b, size)
        return self.outcome_a(xi, a, a), self.outcome_b(xi, b, b)

    def joint(self, a, b, spec: "IntegrationSpec") -> "JointEstimate":
        return m3c_joint(a, b, spec)


@dataclass(frozen=True)
class IntegrationSpec:
    samples: int
    seed: int = 0
    stream: int = 0
    method: str = "monte-carlo"
    workers: int = 1

    def __post_init__(self):
        if self.method != "monte-carlo":
            raise ValidationError(f"unsupported integration method {self.method!r}")
        if self.samples < MIN_SAMPLES:
            raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {self.samples}")

    @property
    def seeded_stream(self) -> SeededStream:
        return SeededStream(self.seed, self.stream)


CELLS = ("pp", "pm", "mp", "mm")


@dataclass(frozen=True)
class JointEstimate:
    """Monte Carlo joint with a per-cell error annotation and the correlator estimate."""

    joint: JointOutcomeDistribution
    cells: dict
    correlation: McEstimate
    samples: int


def _cell_index(s1, s2) -> np.ndarray:
    return (s1 < 0).astype(np.intp) * 2 + (s2 < 0).astype(np.intp)


def m3c_joint(a, b, spec: IntegrationSpec) -> JointEstimate:
    """Integrate the pair vector against its density with uniform sphere draws.

    The background deltas are applied analytically (l1 = a, l2 = b). Each
    uniform draw xi carries weight 4 pi rho(xi|a, b); cell probabilities are the
    weight shares of each outcome pair, so the joint is normalized exactly.
    Cell errors are the standard errors of the unnormalized weighted indicators.
    """
    if not isinstance(spec, IntegrationSpec):
        raise ValidationError("m3c_joint needs an IntegrationSpec")
    a_vec, b_vec = as_vector(a), as_vector(b)

    def task(rng, size):
        xi = uniform_sphere(rng, size)
        weight = 4.0 * math.pi * biased_density_array(xi, a_vec, b_vec)
        cell = _cell_index(m3c_outcome_a_array(xi, a_vec, a_vec), m3c_outcome_b_array(xi, b_vec, b_vec))
        sums = np.bincount(cell, weights=weight, minlength=4)
        sq = np.bincount(cell, weights=weight * weight, minlength=4)
        return np.concatenate([sums, sq])

    totals = reduce_in_order(map_chunks(task, spec.samples, spec.seeded_stream, spec.workers))
    sums, sq = totals[:4], totals[4:]
    n = spec.samples
    cells = {name: McEstimate.from_sums(float(sums[i]), float(sq[i]), n) for i, name in enumerate(CELLS)}
    total = float(sums.sum())
    if total <= 0.0:
        raise ValidationError("density integrated to zero; settings are degenerate for this estimator")
    p = sums / total
    # renormalize the rounding residue into the largest cell
    p[np.argmax(p)] += 1.0 - p.sum()
    joint = JointOutcomeDistribution.from_array(p)
    signs = np.array([1.0, -1.0, -1.0, 1.0])
    corr_w = sums @ signs
    corr_sq = sq.sum()
    correlation = McEstimate.from_sums(float(corr_w), float(corr_sq), n)
    return JointEstimate(joint, cells, correlation, n)
