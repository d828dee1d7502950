import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellhv.core import (
    ChshReport,
    ChshScenario,
    JointOutcomeDistribution,
    Outcome,
    PlanarSetting,
    UnitVector3,
    ValidationError,
    angle_grid,
    chsh_value,
    joint_to_correlation,
    quantum_correlation,
    quantum_joint,
    quantum_joint_distribution,
)

angles = st.floats(-20.0, 20.0, allow_nan=False)
correlators = st.floats(-1.0, 1.0, allow_nan=False)


def test_correlation_examples():
    assert joint_to_correlation(JointOutcomeDistribution(0.25, 0.25, 0.25, 0.25)) == 0.0
    assert joint_to_correlation(JointOutcomeDistribution(0.5, 0, 0, 0.5)) == 1.0
    j = quantum_joint_distribution(PlanarSetting(0.3), PlanarSetting(0.3))
    assert j.as_array().ravel().tolist() == [0.0, 0.5, 0.5, 0.0]
    assert joint_to_correlation(j) == -1.0


def test_unnormalized_joint_rejected():
    with pytest.raises(ValidationError):
        JointOutcomeDistribution(0.3, 0.3, 0.3, 0.3)
    with pytest.raises(ValidationError):
        joint_to_correlation([0.5, 0.5, 0.5, 0.0])
    with pytest.raises(ValidationError):
        JointOutcomeDistribution(1.1, -0.1, 0.0, 0.0)


def test_chsh_examples():
    assert chsh_value(1, 1, 1, 1) == 2
    assert chsh_value(1, 1, 1, -1) == 4
    s = math.sqrt(0.5)
    assert chsh_value(s, s, s, -s) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    with pytest.raises(ValidationError):
        chsh_value(1.5, 0, 0, 0)


def test_quantum_examples():
    a = PlanarSetting(1.0)
    assert quantum_joint(1, 1, a, a) == 0.0
    assert quantum_joint(1, -1, a, a) == 0.5
    b = PlanarSetting(1.0 + math.pi / 2)
    for s1 in (1, -1):
        for s2 in (1, -1):
            assert quantum_joint(s1, s2, a, b) == pytest.approx(0.25, abs=1e-15)
    assert quantum_correlation(a, a) == -1.0
    assert quantum_correlation(a, PlanarSetting(1.0 + math.pi / 3)) == pytest.approx(-0.5, abs=1e-12)
    assert quantum_correlation(a, b) == pytest.approx(0.0, abs=1e-15)


def test_quantum_correlation_matches_outcome_sum_on_grid():
    # sum s1 s2 P(s1, s2) over the closed-form joint, on 100 angle pairs
    grid = np.linspace(0, 2 * math.pi, 10, endpoint=False)
    for x in grid:
        for y in grid:
            a, b = PlanarSetting(x), PlanarSetting(y)
            total = sum(s1 * s2 * quantum_joint(s1, s2, a, b) for s1 in (1, -1) for s2 in (1, -1))
            assert abs(total - quantum_correlation(a, b)) <= 1e-12
            assert abs(joint_to_correlation(quantum_joint_distribution(a, b)) - quantum_correlation(a, b)) <= 1e-12


@given(angles, angles)
def test_quantum_joint_normalized(x, y):
    a, b = PlanarSetting(x), PlanarSetting(y)
    cells = [quantum_joint(s1, s2, a, b) for s1 in (1, -1) for s2 in (1, -1)]
    assert min(cells) >= 0.0
    assert abs(sum(cells) - 1.0) <= 1e-12


@given(angles, angles)
def test_embedding_preserves_dot_products(x, y):
    u, v = PlanarSetting(x).to_vector(), PlanarSetting(y).to_vector()
    assert u.z == 0.0
    assert abs(u.dot(v) - math.cos(x - y)) <= 1e-12


@given(correlators, correlators, correlators, correlators)
def test_chsh_bounded_by_four(m1, m2, m3, m4):
    assert abs(chsh_value(m1, m2, m3, m4)) <= 4.0


@given(correlators, correlators, correlators, correlators, correlators)
def test_chsh_linear_in_each_argument(m1, m2, m3, m4, other):
    base = chsh_value(m1, m2, m3, m4)
    assert chsh_value(other, m2, m3, m4) - base == pytest.approx(other - m1, abs=1e-12)
    assert chsh_value(m1, m2, m3, other) - base == pytest.approx(m4 - other, abs=1e-12)


def test_unit_vector_validation():
    with pytest.raises(ValidationError):
        UnitVector3(1.0, 1.0, 0.0)
    v = UnitVector3.normalized([3.0, 4.0, 0.0])
    assert v.as_array().tolist() == pytest.approx([0.6, 0.8, 0.0])
    assert (-v).dot(v) == pytest.approx(-1.0)
    assert UnitVector3.from_spherical(0.0, 0.0) == UnitVector3(0.0, 0.0, 1.0)


def test_planar_setting_reduces_angles():
    assert PlanarSetting(2 * math.pi + 0.5).angle == pytest.approx(0.5)
    assert PlanarSetting.from_degrees(90).angle == pytest.approx(math.pi / 2)
    assert PlanarSetting(-math.pi / 2).degrees == pytest.approx(270.0)
    with pytest.raises(ValidationError):
        PlanarSetting(float("nan"))


def test_outcome_coercion():
    assert Outcome.coerce(-1) is Outcome.MINUS
    assert Outcome.coerce("1") is Outcome.PLUS
    with pytest.raises(ValidationError):
        Outcome.coerce(0)


def test_angle_grid():
    grid = angle_grid(8)
    assert len(grid) == 8
    assert grid[2].angle == pytest.approx(math.pi / 2)


def test_scenario_pairs_and_report():
    s = ChshScenario.from_angles(0, 90, 225, 135, degrees=True)
    assert [(x.degrees, y.degrees) for x, y in s.pairs()] == pytest.approx(
        [(0, 225), (90, 225), (0, 135), (90, 135)]
    )
    report = ChshReport.from_correlators(1, 1, 1, -1)
    assert report.x_bi == 4
    with pytest.raises(ValidationError):
        ChshReport(1, 1, 1, -1, 3.0)
