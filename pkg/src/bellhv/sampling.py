"""Seeded Monte Carlo estimation of joints and correlators.

Any model with a ``sample_outcomes(rng, x, y, size)`` method returning two
``+1/-1`` arrays can be estimated here; the discrete models and the two
spherical models all provide one.
"""

from __future__ import annotations

import numpy as np

from .core import JointOutcomeDistribution, UnitVector3, ValidationError
from .models.spherical import MIN_SAMPLES, HallModel, JointEstimate
from .streams import (
    McEstimate,
    SamplingError,
    SeededStream,
    biased_sphere,
    map_chunks,
    reduce_in_order,
    uniform_sphere,
)

__all__ = [
    "SeededStream",
    "McEstimate",
    "SamplingError",
    "JointEstimate",
    "sample_uniform_sphere",
    "sample_hall_lambda",
    "estimate_joint_mc",
    "estimate_hall_joint",
    "estimate_correlation_mc",
]

CELLS = ("pp", "pm", "mp", "mm")


def sample_uniform_sphere(s: SeededStream, n: int | None = None):
    """One :class:`UnitVector3` (``n`` is None) or an ``(n, 3)`` array of uniform draws."""
    rng = s.generator(0)
    if n is None:
        return UnitVector3.from_array(uniform_sphere(rng, 1)[0])
    return uniform_sphere(rng, n)


def sample_hall_lambda(a, b, s: SeededStream, n: int | None = None):
    """Draw the pair vector from Hall's setting-dependent density.

    Region first (agreement with probability (1 + a.b)/2), then a uniform
    point inside it by rejection; the composite density is the closed form
    used by :func:`bellhv.models.hall_density` exactly.
    """
    rng = s.generator(0)
    if n is None:
        return UnitVector3.from_array(biased_sphere(rng, a, b, 1)[0])
    return biased_sphere(rng, a, b, n)


def _check_n(n: int, minimum: int = 1):
    if int(n) < minimum:
        raise ValidationError(f"need at least {minimum} samples, got {n}")


def _outcome_counts(model, x, y, n, s, workers) -> np.ndarray:
    def task(rng, size):
        s1, s2 = model.sample_outcomes(rng, x, y, size)
        cell = (s1 < 0).astype(np.intp) * 2 + (s2 < 0).astype(np.intp)
        return np.bincount(cell, minlength=4)

    return reduce_in_order(map_chunks(task, n, s, workers))


def estimate_joint_mc(model, x, y, n: int, s: SeededStream, workers: int = 1) -> JointEstimate:
    """Frequency estimate of P(s1, s2 | x, y) with binomial standard errors per cell."""
    _check_n(n)
    counts = _outcome_counts(model, x, y, n, s, workers)
    cells = {name: McEstimate.binomial(int(counts[i]), n) for i, name in enumerate(CELLS)}
    joint = JointOutcomeDistribution.from_array(counts / n)
    agree = counts[0] + counts[3]
    # s1*s2 is +1 on agreeing cells, so its mean and second moment follow from the counts
    correlation = McEstimate.from_sums(float(2 * agree - n), float(n), n)
    return JointEstimate(joint, cells, correlation, n)


def estimate_hall_joint(a, b, n: int, s: SeededStream, workers: int = 1) -> JointEstimate:
    _check_n(n, MIN_SAMPLES)
    return estimate_joint_mc(HallModel(), a, b, n, s, workers)


def estimate_correlation_mc(model, a, b, n: int, s: SeededStream, workers: int = 1) -> McEstimate:
    """Mean of s1*s2 over ``n`` draws, with its standard error."""
    if not hasattr(model, "sample_outcomes"):
        raise ValidationError(f"{type(model).__name__} cannot generate per-sample outcomes")
    return estimate_joint_mc(model, a, b, n, s, workers).correlation
