"""Counter-based random streams, chunked Monte Carlo reduction and sphere samplers.

Every Monte Carlo run of ``n`` draws is cut into fixed-size chunks. Chunk ``k``
of stream ``(seed, stream)`` draws from a Philox generator keyed by the seed
sequence ``SeedSequence(seed, spawn_key=(stream, k))``. Chunk boundaries depend
only on ``n``, so partial results are identical for any worker count, and they
are reduced in chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .core import BellError, ValidationError, as_vector

__all__ = [
    "CHUNK_SIZE",
    "SamplingError",
    "SeededStream",
    "McEstimate",
    "chunk_sizes",
    "map_chunks",
    "uniform_sphere",
    "sign",
    "biased_sphere",
]

CHUNK_SIZE = 1 << 16
MAX_REJECTION_ROUNDS = 100_000

T = TypeVar("T")


class SamplingError(BellError, RuntimeError):
    """Rejection sampling did not terminate within its iteration cap."""


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if int(self.stream) < 0:
            raise ValidationError(f"stream index must be nonnegative, got {self.stream!r}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", int(self.stream))

    def generator(self, counter: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, int(counter)))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, index: int) -> "SeededStream":
        """Stream ``index`` of the same seed; used to give each setting pair its own draws."""
        return SeededStream(self.seed, index)


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with standard error ``std / sqrt(samples)`` (population std of the sample)."""

    mean: float
    standard_error: float
    samples: int

    @classmethod
    def from_sums(cls, total: float, total_sq: float, samples: int) -> "McEstimate":
        if samples < 1:
            raise ValidationError("an estimate needs at least one sample")
        mean = total / samples
        var = max(total_sq / samples - mean * mean, 0.0)
        return cls(float(mean), math.sqrt(var / samples), int(samples))

    @classmethod
    def from_samples(cls, values) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        return cls.from_sums(float(values.sum()), float(np.dot(values, values)), values.size)

    @classmethod
    def binomial(cls, count: int, samples: int) -> "McEstimate":
        p = count / samples
        return cls(float(p), math.sqrt(p * (1.0 - p) / samples), int(samples))

    def within(self, target: float, n_sigma: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.mean - target) <= max(n_sigma * self.standard_error, floor)


def chunk_sizes(n: int, chunk_size: int = CHUNK_SIZE) -> list[int]:
    full, rest = divmod(int(n), chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(
    task: Callable[[np.random.Generator, int], T],
    n: int,
    stream: SeededStream,
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> list[T]:
    """Run ``task(rng, size)`` on each chunk; results come back in chunk order."""
    jobs = [(k, size) for k, size in enumerate(chunk_sizes(n, chunk_size))]

    def run(job):
        k, size = job
        return task(stream.generator(k), size)

    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def reduce_in_order(parts: Sequence[np.ndarray]) -> np.ndarray:
    total = np.array(parts[0], dtype=float, copy=True)
    for part in parts[1:]:
        total += part
    return total


def uniform_sphere(rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` points uniform on the unit sphere, shape ``(size, 3)``."""
    v = rng.standard_normal((size, 3))
    norms = np.linalg.norm(v, axis=1)
    # a zero-norm Gaussian draw has probability zero; redraw defensively
    while np.any(norms == 0.0):
        bad = norms == 0.0
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1)
    return v / norms[:, None]


def sign(x):
    """Sign with sgn(0) = +1, as int8."""
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int8)


def biased_sphere(rng: np.random.Generator, u, w, size: int) -> np.ndarray:
    """Draw from the piecewise-constant sphere density biased toward sign agreement.

    The density puts total mass (1 + u.w)/2 uniformly on the region where
    sgn(u.p) = sgn(w.p) and (1 - u.w)/2 uniformly on its complement. A region
    is chosen first, then a point is drawn uniformly inside it by rejection
    from the uniform sphere.
    """
    u = as_vector(u).as_array()
    w = as_vector(w).as_array()
    cos_uw = float(np.clip(np.dot(u, w), -1.0, 1.0))
    want_agree = rng.random(size) < 0.5 * (1.0 + cos_uw)
    out = np.empty((size, 3))
    pending = np.arange(size)
    rounds = 0
    while pending.size:
        if rounds >= MAX_REJECTION_ROUNDS:
            raise SamplingError(f"{pending.size} draws still pending after {rounds} rejection rounds")
        cand = uniform_sphere(rng, pending.size)
        agree = sign(cand @ u) == sign(cand @ w)
        ok = agree == want_agree[pending]
        out[pending[ok]] = cand[ok]
        pending = pending[~ok]
        rounds += 1
    return out
