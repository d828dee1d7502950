"""Shared value types, CHSH algebra and the singlet reference prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Hashable, Union

import numpy as np

__all__ = [
    "PROB_TOL",
    "BellError",
    "ValidationError",
    "Outcome",
    "PlanarSetting",
    "UnitVector3",
    "JointOutcomeDistribution",
    "ChshScenario",
    "ChshReport",
    "as_vector",
    "angle_grid",
    "joint_to_correlation",
    "chsh_value",
    "quantum_joint",
    "quantum_correlation",
]

PROB_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class BellError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BellError, ValueError):
    """An input violates a normalization, range or domain constraint."""


class Outcome(IntEnum):
    PLUS = 1
    MINUS = -1

    @classmethod
    def coerce(cls, value: Any) -> "Outcome":
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ValidationError(f"outcome must be +1 or -1, got {value!r}") from None


@dataclass(frozen=True)
class UnitVector3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm2 = self.x * self.x + self.y * self.y + self.z * self.z
        if not abs(norm2 - 1.0) <= PROB_TOL:
            raise ValidationError(f"not a unit vector: |v|^2 = {norm2!r}")

    @classmethod
    def from_array(cls, v) -> "UnitVector3":
        v = np.asarray(v, dtype=float).reshape(3)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def normalized(cls, v) -> "UnitVector3":
        v = np.asarray(v, dtype=float).reshape(3)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return cls.from_array(v / n)

    @classmethod
    def from_spherical(cls, theta: float, phi: float) -> "UnitVector3":
        """Polar angle ``theta`` from +z, azimuth ``phi`` from +x."""
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "UnitVector3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def angle_to(self, other: "UnitVector3") -> float:
        return math.acos(min(1.0, max(-1.0, self.dot(other))))

    def __neg__(self) -> "UnitVector3":
        return UnitVector3(-self.x, -self.y, -self.z)


@dataclass(frozen=True)
class PlanarSetting:
    """Analyzer direction in the equatorial plane, in radians."""

    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValidationError(f"angle must be finite, got {self.angle!r}")
        object.__setattr__(self, "angle", float(self.angle) % TWO_PI)

    @classmethod
    def from_degrees(cls, degrees: float) -> "PlanarSetting":
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.angle)

    def to_vector(self) -> UnitVector3:
        # z = 0 keeps embed(a) . embed(b) = cos(a - b)
        return UnitVector3(math.cos(self.angle), math.sin(self.angle), 0.0)


Setting = Union[PlanarSetting, UnitVector3, Hashable]


def as_vector(setting) -> UnitVector3:
    """Coerce a planar setting, unit vector or 3-sequence to a :class:`UnitVector3`."""
    if isinstance(setting, UnitVector3):
        return setting
    if isinstance(setting, PlanarSetting):
        return setting.to_vector()
    if isinstance(setting, (int, float)):
        return PlanarSetting(float(setting)).to_vector()
    return UnitVector3.from_array(setting)


def angle_grid(resolution: int) -> list[PlanarSetting]:
    """``resolution`` equally spaced planar settings starting at angle 0."""
    return [PlanarSetting(TWO_PI * k / resolution) for k in range(resolution)]


@dataclass(frozen=True)
class JointOutcomeDistribution:
    """P(s1, s2 | x, y) over the four outcome pairs (++, +-, -+, --)."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self):
        cells = (self.p_pp, self.p_pm, self.p_mp, self.p_mm)
        for c in cells:
            if not (-PROB_TOL <= c <= 1.0 + PROB_TOL):
                raise ValidationError(f"joint entry out of [0, 1]: {cells}")
        total = math.fsum(cells)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"joint sums to {total!r}, not 1")

    @classmethod
    def from_array(cls, p) -> "JointOutcomeDistribution":
        """From a 2x2 array indexed ``[s1, s2]`` with +1 first, or a flat length-4 array."""
        p = np.asarray(p, dtype=float).reshape(4)
        return cls(float(p[0]), float(p[1]), float(p[2]), float(p[3]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.p_pp, self.p_pm], [self.p_mp, self.p_mm]])

    def prob(self, s1, s2) -> float:
        i = 0 if Outcome.coerce(s1) == 1 else 1
        j = 0 if Outcome.coerce(s2) == 1 else 1
        return float(self.as_array()[i, j])

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.as_array()
        return p.sum(axis=1), p.sum(axis=0)

    @property
    def correlation(self) -> float:
        return joint_to_correlation(self)

    def __iter__(self):
        return iter((self.p_pp, self.p_pm, self.p_mp, self.p_mm))


@dataclass(frozen=True)
class ChshScenario:
    """Four settings (a, a', b, b'); either planar angles, unit vectors or table labels."""

    a: Any
    a_prime: Any
    b: Any
    b_prime: Any

    def __post_init__(self):
        settings = (self.a, self.a_prime, self.b, self.b_prime)
        if any(s is None for s in settings):
            raise ValidationError("all four settings must be present")
        kinds = {type(s) for s in settings}
        if len(kinds) != 1 and not kinds <= {str, int}:
            raise ValidationError(f"settings of one scenario must share a type, got {kinds}")

    @classmethod
    def from_angles(cls, a, a_prime, b, b_prime, *, degrees=False) -> "ChshScenario":
        make = PlanarSetting.from_degrees if degrees else PlanarSetting
        return cls(make(a), make(a_prime), make(b), make(b_prime))

    def pairs(self):
        """Setting pairs in CHSH order: (a,b), (a',b), (a,b'), (a',b')."""
        return (
            (self.a, self.b),
            (self.a_prime, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b_prime),
        )


@dataclass(frozen=True)
class ChshReport:
    m_ab: float
    m_apb: float
    m_abp: float
    m_apbp: float
    x_bi: float
    scenario: ChshScenario | None = None

    def __post_init__(self):
        expected = chsh_value(self.m_ab, self.m_apb, self.m_abp, self.m_apbp)
        if abs(expected - self.x_bi) > PROB_TOL:
            raise ValidationError(f"x_bi={self.x_bi} inconsistent with correlators ({expected})")

    @classmethod
    def from_correlators(cls, m_ab, m_apb, m_abp, m_apbp, scenario=None) -> "ChshReport":
        x = chsh_value(m_ab, m_apb, m_abp, m_apbp)
        return cls(float(m_ab), float(m_apb), float(m_abp), float(m_apbp), x, scenario)

    @property
    def correlators(self) -> tuple[float, float, float, float]:
        return (self.m_ab, self.m_apb, self.m_abp, self.m_apbp)


def joint_to_correlation(j: JointOutcomeDistribution) -> float:
    """Average product <s1 s2> = 2 [P(++) + P(--)] - 1."""
    if not isinstance(j, JointOutcomeDistribution):
        j = JointOutcomeDistribution.from_array(j)
    return 2.0 * (j.p_pp + j.p_mm) - 1.0


def chsh_value(m_ab: float, m_apb: float, m_abp: float, m_apbp: float) -> float:
    """CHSH combination M(a,b) + M(a',b) + M(a,b') - M(a',b'); no clamping."""
    for m in (m_ab, m_apb, m_abp, m_apbp):
        if not (-1.0 - PROB_TOL <= m <= 1.0 + PROB_TOL):
            raise ValidationError(f"correlator {m!r} outside [-1, 1]")
    return float(m_ab + m_apb + m_abp - m_apbp)


def _planar_cos(a, b) -> float:
    if isinstance(a, PlanarSetting) and isinstance(b, PlanarSetting):
        return math.cos(a.angle - b.angle)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.cos(a - b)
    return as_vector(a).dot(as_vector(b))


def quantum_joint(s1, s2, a, b) -> float:
    """Singlet-state joint probability 1/4 [1 - s1 s2 cos(a - b)]."""
    s1 = Outcome.coerce(s1)
    s2 = Outcome.coerce(s2)
    return 0.25 * (1.0 - int(s1) * int(s2) * _planar_cos(a, b))


def quantum_correlation(a, b) -> float:
    return -_planar_cos(a, b)


def quantum_joint_distribution(a, b) -> JointOutcomeDistribution:
    return JointOutcomeDistribution(
        quantum_joint(1, 1, a, b),
        quantum_joint(1, -1, a, b),
        quantum_joint(-1, 1, a, b),
        quantum_joint(-1, -1, a, b),
    )
