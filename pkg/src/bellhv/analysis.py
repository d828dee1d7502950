"""Audits, exact CHSH evaluation, enumeration, grid search and the decoupling scan."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    PROB_TOL,
    TWO_PI,
    BellError,
    ChshReport,
    ChshScenario,
    PlanarSetting,
    ValidationError,
    angle_grid,
    as_vector,
)
from .models.discrete import (
    LEFT_SETTINGS,
    RIGHT_SETTINGS,
    AlphaConstruction,
    DichotomicM3Model,
    M1Model,
    M2Model,
    SelectionTables,
    SingletReference,
    build_alpha_m3,
    hidden_tuples,
    is_indeterminate,
    mi_ratio,
)
from .models.spherical import ContinuousM3Model, HallModel
from .models.tables import ProbabilityTable
from .streams import McEstimate, SeededStream, map_chunks, reduce_in_order, uniform_sphere

__all__ = [
    "UnsupportedOperationError",
    "AuditReport",
    "DecouplingPoint",
    "CANONICAL_SCENARIO",
    "normalization_audit",
    "density_normalization_check",
    "chsh_exact",
    "alpha_chsh",
    "enumerate_binary_alphas",
    "maximizers",
    "search_chsh_matrix",
    "grid_search_chsh",
    "planar_correlation",
    "mix_backgrounds",
    "decoupling_scan",
    "random_model",
    "mi_diagnostics",
    "mi_summary",
    "MiEntry",
    "xi_factorization_residual",
]

CANONICAL_SCENARIO = ChshScenario("a", "a'", "b", "b'")
MAX_SUPPORT = 8


class UnsupportedOperationError(BellError, TypeError):
    """The model cannot be evaluated this way (for example continuous models on the exact path)."""


@dataclass(frozen=True)
class AuditReport:
    residuals: dict
    worst: float
    passed: bool

    def failing(self) -> list[tuple[str, str, float]]:
        return [
            (table, key, r)
            for table, rows in self.residuals.items()
            for key, r in rows.items()
            if r > PROB_TOL
        ]


def _tables_of(model) -> dict[str, ProbabilityTable]:
    if isinstance(model, ProbabilityTable):
        return {model.name: model}
    if isinstance(model, AlphaConstruction):
        model = build_alpha_m3(model)
    if hasattr(model, "tables"):
        return model.tables()
    return {}


def normalization_audit(model) -> AuditReport:
    """|row sum - 1| for every conditioning tuple of every table of ``model``.

    Models without tables (the spherical ones) audit clean.
    """
    residuals = {name: table.residuals() for name, table in _tables_of(model).items()}
    worst = max((r for rows in residuals.values() for r in rows.values()), default=0.0)
    return AuditReport(residuals, worst, worst <= PROB_TOL)


def density_normalization_check(density, a, b, n: int, s: SeededStream, workers: int = 1) -> McEstimate:
    """Integral of ``density(points, a, b)`` over the sphere as 4 pi times its mean at uniform draws."""
    if n < 100_000:
        raise ValidationError(f"density check needs at least 1e5 draws, got {n}")
    if hasattr(density, "density"):
        density = density.density
    a, b = as_vector(a), as_vector(b)

    def task(rng, size):
        v = 4.0 * math.pi * np.asarray(density(uniform_sphere(rng, size), a, b), dtype=float)
        return np.array([v.sum(), np.dot(v, v)])

    total, total_sq = reduce_in_order(map_chunks(task, n, s, workers))
    return McEstimate.from_sums(float(total), float(total_sq), n)


def chsh_exact(model, scenario: ChshScenario | None = None) -> ChshReport:
    """Exact correlators and CHSH value for a finite model (or the closed-form singlet)."""
    if isinstance(model, (HallModel, ContinuousM3Model)):
        raise UnsupportedOperationError(
            f"{type(model).__name__} has no exact joint; estimate it with bellhv.sampling instead"
        )
    if isinstance(model, AlphaConstruction):
        model = build_alpha_m3(model)
    if scenario is None:
        if isinstance(model, SingletReference):
            raise ValidationError("the singlet reference needs an explicit scenario")
        scenario = CANONICAL_SCENARIO
    if not hasattr(model, "joint"):
        raise UnsupportedOperationError(f"cannot evaluate {type(model).__name__} exactly")
    m = [model.joint(x, y).correlation for x, y in scenario.pairs()]
    return ChshReport.from_correlators(*m, scenario=scenario)


def alpha_chsh(alphas) -> np.ndarray | float:
    """CHSH value of the alpha construction in closed form.

    Accepts one vector of eight alphas or an ``(n, 8)`` array. Pairs (1,2),
    (3,4), (5,6) enter with a plus sign and (7,8) with a minus sign.
    """
    al = np.asarray(alphas, dtype=float)
    a = np.atleast_2d(al)

    def agree(i, j):
        return a[:, i] * a[:, j] + (1.0 - a[:, i]) * (1.0 - a[:, j])

    x = 2.0 * (agree(0, 1) + agree(2, 3) + agree(4, 5) - agree(6, 7)) - 2.0
    return float(x[0]) if al.ndim == 1 else x


def enumerate_binary_alphas(selection: SelectionTables | None = None) -> list[tuple[tuple[int, ...], float]]:
    """CHSH value for each of the 256 binary alpha vectors, in lexicographic order.

    The selection tables are validated (distinct triples); given that, every
    pair's joint reduces to the two-term form and the closed form applies.
    """
    if selection is None:
        selection = SelectionTables.standard()
    elif not isinstance(selection, SelectionTables):
        raise ValidationError("selection must be a SelectionTables instance")
    bits = np.array(list(itertools.product((0, 1), repeat=8)), dtype=float)
    values = alpha_chsh(bits)
    return [(tuple(int(b) for b in row), float(v)) for row, v in zip(bits, values)]


def maximizers(results: Iterable[tuple[tuple[int, ...], float]], target: float = 4.0) -> list[tuple[int, ...]]:
    return [bits for bits, x in results if x == target]


def search_chsh_matrix(corr: np.ndarray, workers: int = 1) -> tuple[tuple[int, int, int, int], float]:
    """Exhaustive CHSH maximization over a correlator matrix ``corr[left, right]``.

    Returns the lexicographically smallest index quadruple (a, a', b, b')
    attaining the maximum, and the maximum.
    """
    c = np.asarray(corr, dtype=float)
    if c.ndim != 2 or 0 in c.shape:
        raise ValidationError("correlator matrix must be 2-D and nonempty")
    if np.any(np.abs(c) > 1.0 + PROB_TOL) or not np.all(np.isfinite(c)):
        raise ValidationError("correlators must lie in [-1, 1]")
    plus_jk = c[:, :, None]
    minus_jl = c[:, None, :]

    def best_for(i):
        x = c[i][None, :, None] + plus_jk + c[i][None, None, :] - minus_jl
        flat = int(np.argmax(x))
        return float(x.flat[flat]), (i, *np.unravel_index(flat, x.shape))

    rows = range(c.shape[0])
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(best_for, rows))
    else:
        results = [best_for(i) for i in rows]
    best_val, best_idx = results[0]
    for val, idx in results[1:]:
        if val > best_val:
            best_val, best_idx = val, idx
    return tuple(int(k) for k in best_idx), best_val


def grid_search_chsh(
    correlation: Callable[[PlanarSetting, PlanarSetting], float], resolution: int, workers: int = 1
) -> tuple[ChshScenario, float]:
    """Maximize the CHSH value over all planar quadruples on a ``resolution``-point angle grid."""
    if resolution < 8:
        raise ValidationError(f"resolution must be at least 8, got {resolution}")
    grid = angle_grid(resolution)
    corr = np.array([[correlation(a, b) for b in grid] for a in grid], dtype=float)
    (i, j, k, l), value = search_chsh_matrix(corr, workers)
    return ChshScenario(grid[i], grid[j], grid[k], grid[l]), value


def planar_correlation(model, resolution: int) -> Callable[[PlanarSetting, PlanarSetting], float]:
    """Correlator of a finite model whose settings 0..resolution-1 stand for grid angles 2 pi k / resolution."""
    expected = tuple(range(resolution))
    if tuple(model.left_settings) != expected or tuple(model.right_settings) != expected:
        raise ValidationError(f"model settings must be 0..{resolution - 1} on both wings")
    corr = model.correlation_matrix()

    def index(s: PlanarSetting) -> int:
        pos = s.angle * resolution / TWO_PI
        k = int(round(pos))
        if abs(pos - k) > 1e-9:
            raise ValidationError(f"angle {s.angle} is not on the {resolution}-point grid")
        return k % resolution

    return lambda a, b: float(corr[index(a), index(b)])


def mix_backgrounds(model: DichotomicM3Model, kappa: float) -> DichotomicM3Model:
    """Replace each background row by kappa * row + (1 - kappa) * uniform on both wings."""
    kappa = float(kappa)
    if not (0.0 <= kappa <= 1.0):
        raise ValidationError(f"kappa must lie in [0, 1], got {kappa}")

    def mix(table: ProbabilityTable) -> ProbabilityTable:
        uniform = np.full_like(table.values, 1.0 / table.outcome.cardinality)
        return table.replace(kappa * table.values + (1.0 - kappa) * uniform)

    return model.replace(left_bg=mix(model.left_bg_table), right_bg=mix(model.right_bg_table))


@dataclass(frozen=True)
class DecouplingPoint:
    kappa: float
    x_bi: float
    scenario: ChshScenario
    report: ChshReport


def decoupling_scan(base, kappas: Sequence[float], scenario: ChshScenario | None = None) -> list[DecouplingPoint]:
    """Exact CHSH value as the analyzer-background coupling ``kappa`` goes from 1 (full) to 0 (none)."""
    kappas = [float(k) for k in kappas]
    if not kappas:
        raise ValidationError("kappa grid is empty")
    bad = [k for k in kappas if not (0.0 <= k <= 1.0)]
    if bad:
        raise ValidationError(f"kappa values outside [0, 1]: {bad}")
    model = build_alpha_m3(base) if isinstance(base, AlphaConstruction) else base
    if not isinstance(model, DichotomicM3Model):
        raise ValidationError("decoupling scan needs an alpha construction or a dichotomic M3 model")
    scenario = scenario or CANONICAL_SCENARIO
    points = []
    for k in kappas:
        report = chsh_exact(mix_backgrounds(model, k), scenario)
        points.append(DecouplingPoint(k, report.x_bi, scenario, report))
    return points


def _random_rows(rng: np.random.Generator, shape) -> np.ndarray:
    raw = rng.random(shape)
    return raw / raw.sum(axis=-1, keepdims=True)


def random_model(kind: str, s: SeededStream, *, n_lambda: int | None = None, n_settings: int | None = None):
    """Model of ``kind`` ("M1", "M2" or "M3") with uniform entries, rows normalized.

    ``n_lambda`` is the hidden-variable support per variable (1..8; drawn
    uniformly when omitted; fixed at 2 for M3). With ``n_settings`` the
    settings of each wing are labelled 0..n_settings-1, otherwise a, a' and b, b'.
    """
    rng = s.generator(0)
    if kind not in ("M1", "M2", "M3"):
        raise ValidationError(f"unknown model kind {kind!r}")
    if kind == "M3":
        if n_lambda not in (None, 2):
            raise ValidationError("dichotomic M3 models have binary hidden variables")
        n_lambda = 2
    elif n_lambda is None:
        n_lambda = int(rng.integers(1, MAX_SUPPORT + 1))
    if not (1 <= n_lambda <= MAX_SUPPORT):
        raise ValidationError(f"hidden-variable support must be in 1..{MAX_SUPPORT}, got {n_lambda}")
    if n_settings is None:
        left, right = LEFT_SETTINGS, RIGHT_SETTINGS
    else:
        if n_settings < 1:
            raise ValidationError("need at least one setting per wing")
        left = right = tuple(range(n_settings))
    nx, ny = len(left), len(right)
    if kind == "M1":
        return M1Model.from_arrays(
            _random_rows(rng, n_lambda),
            _random_rows(rng, (nx, n_lambda, 2)),
            _random_rows(rng, (ny, n_lambda, 2)),
            left_settings=left,
            right_settings=right,
        )
    if kind == "M2":
        return M2Model.from_arrays(
            _random_rows(rng, (nx, n_lambda)),
            _random_rows(rng, (ny, n_lambda)),
            _random_rows(rng, (nx, n_lambda, 2)),
            _random_rows(rng, (ny, n_lambda, 2)),
            left_settings=left,
            right_settings=right,
        )
    return DichotomicM3Model.from_arrays(
        _random_rows(rng, (nx, 2)),
        _random_rows(rng, (ny, 2)),
        _random_rows(rng, (2, 2, 2)),
        _random_rows(rng, (2, 2, nx, 2)),
        _random_rows(rng, (2, 2, ny, 2)),
        left_settings=left,
        right_settings=right,
    )


@dataclass(frozen=True)
class MiEntry:
    hidden: tuple
    settings: tuple
    primed: tuple
    ratio: float


def mi_diagnostics(model) -> list[MiEntry]:
    """Measurement-independence ratio for every hidden tuple and every pair of setting pairs."""
    if isinstance(model, AlphaConstruction):
        model = build_alpha_m3(model)
    pairs = list(itertools.product(model.left_settings, model.right_settings))
    out = []
    for hidden in hidden_tuples(model):
        for (x, y), (xp, yp) in itertools.product(pairs, repeat=2):
            out.append(MiEntry(hidden, (x, y), (xp, yp), mi_ratio(model, hidden, x, y, xp, yp)))
    return out


def mi_summary(entries: Sequence[MiEntry]) -> dict:
    """Counts of ratios equal to one, different from one (finite or infinite) and indeterminate."""
    ones = sum(1 for e in entries if e.ratio == 1.0)
    indeterminate = sum(1 for e in entries if is_indeterminate(e.ratio))
    infinite = sum(1 for e in entries if math.isinf(e.ratio))
    return {
        "tuples": len(entries),
        "equal_one": ones,
        "not_one": len(entries) - ones - indeterminate,
        "infinite": infinite,
        "indeterminate": indeterminate,
    }


def xi_factorization_residual(model: DichotomicM3Model, x, y) -> float:
    """max |P(l1,l2|xi) - P(l1|xi) P(l2|xi)| at settings (x, y); zero when the backgrounds decouple given xi.

    Purely diagnostic: no claim is attached to whether violating the CHSH
    bound requires this to be nonzero.
    """
    xi_idx = model.left_bg_table.conditions[0].index(x)
    yi_idx = model.right_bg_table.conditions[0].index(y)
    p = np.einsum(
        "a,b,abk->kab",
        model.left_bg_table.values[xi_idx],
        model.right_bg_table.values[yi_idx],
        model.xi_table.values,
    )
    worst = 0.0
    for k in range(p.shape[0]):
        pk = p[k].sum()
        if pk == 0.0:
            continue
        cond = p[k] / pk
        worst = max(worst, float(np.max(np.abs(cond - np.outer(cond.sum(1), cond.sum(0))))))
    return worst
