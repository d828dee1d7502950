import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellhv.analysis import chsh_exact, random_model
from bellhv.core import ValidationError
from bellhv.models import (
    AlphaConstruction,
    ConstructionError,
    DichotomicM3Model,
    M1Model,
    M2Model,
    SelectionTables,
    build_alpha_m3,
    is_indeterminate,
    m1_joint,
    m2_joint,
    m3_joint,
    mi_ratio,
)
from bellhv.streams import SeededStream

import oracles

seeds = st.integers(0, 2**32 - 1)


def _dict_tables(m: DichotomicM3Model):
    """Nested-dict view of a dichotomic model for the loop oracle."""
    lb, rb, xi, lt, rt = (m.left_bg_table, m.right_bg_table, m.xi_table, m.left_table, m.right_table)
    return (
        {x: {v: lb.prob(v, x) for v in (1, 2)} for x in m.left_settings},
        {y: {v: rb.prob(v, y) for v in (1, 2)} for y in m.right_settings},
        {(a, b): {k: xi.prob(k, a, b) for k in (1, 2)} for a in (1, 2) for b in (1, 2)},
        {key: {s: lt.prob(s, *key) for s in (1, -1)} for key in lt.keys()},
        {key: {s: rt.prob(s, *key) for s in (1, -1)} for key in rt.keys()},
    )


# M1 -------------------------------------------------------------------------

def test_m1_examples():
    uniform = M1Model.from_arrays([1.0], np.full((2, 1, 2), 0.5), np.full((2, 1, 2), 0.5))
    assert m1_joint(uniform, "a", "b").as_array().ravel().tolist() == [0.25] * 4
    # lam = 1 forces (+, +), lam = 2 forces (-, -)
    det = np.array([[[1.0, 0.0], [0.0, 1.0]]] * 2)
    corr = M1Model.from_arrays([0.5, 0.5], det, det)
    j = m1_joint(corr, "a'", "b")
    assert j.as_array().ravel().tolist() == [0.5, 0.0, 0.0, 0.5]
    assert j.correlation == 1.0


def test_m1_unknown_setting():
    m = random_model("M1", SeededStream(0))
    with pytest.raises(ValidationError):
        m1_joint(m, "c", "b")


def test_m1_at_quantum_angles_obeys_bound():
    # settings labelled by the optimal angles in degrees
    m = random_model("M1", SeededStream(3), n_settings=None)
    m = M1Model.from_arrays(
        m.prior.values, m.left_table.values, m.right_table.values,
        left_settings=(0, 90), right_settings=(225, 135),
    )
    from bellhv.core import ChshScenario
    assert chsh_exact(m, ChshScenario(0, 90, 225, 135)).x_bi <= 2 + 1e-9


# M2 -------------------------------------------------------------------------

def test_m2_uniform():
    m = M2Model.from_arrays(np.full((2, 3), 1 / 3), np.full((2, 2), 0.5), np.full((2, 3, 2), 0.5),
                            np.full((2, 2, 2), 0.5))
    assert m2_joint(m, "a", "b'").as_array().ravel().tolist() == pytest.approx([0.25] * 4, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_m2_joint_is_product_of_marginals(seed):
    m = random_model("M2", SeededStream(seed))
    for x, y in itertools.product(m.left_settings, m.right_settings):
        left, right = m.marginals(x, y)
        assert np.abs(m.joint_array(x, y) - np.outer(left, right)).max() <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(["M1", "M2"]))
def test_local_models_obey_bound(seed, kind):
    m = random_model(kind, SeededStream(seed))
    assert chsh_exact(m).x_bi <= 2 + 1e-9


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(["M1", "M2", "M3"]))
def test_joints_normalized(seed, kind):
    m = random_model(kind, SeededStream(seed))
    for x, y in itertools.product(m.left_settings, m.right_settings):
        assert abs(m.joint_array(x, y).sum() - 1.0) <= 1e-12


# M3 -------------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(seeds)
def test_m3_matches_loop_oracle(seed):
    m = random_model("M3", SeededStream(seed))
    tables = _dict_tables(m)
    for x, y in itertools.product(m.left_settings, m.right_settings):
        want = oracles.joint_sum_m3(*tables, x, y)
        got = m3_joint(m, x, y)
        for (s1, s2), p in want.items():
            assert abs(got.prob(s1, s2) - p) <= 1e-12


def test_m3_correlation_matrix_matches_joints():
    m = random_model("M3", SeededStream(11))
    mat = m.correlation_matrix()
    for i, x in enumerate(m.left_settings):
        for j, y in enumerate(m.right_settings):
            assert mat[i, j] == pytest.approx(m.correlation(x, y), abs=1e-14)


def test_m3_degenerates_to_product_form():
    rng = np.random.default_rng(5)
    left = rng.random(2)
    right = rng.random(2)
    lp = np.stack([left, 1 - left], axis=-1)  # per setting, no xi or l dependence
    rp = np.stack([right, 1 - right], axis=-1)
    m = DichotomicM3Model.from_arrays(
        np.full((2, 2), 0.5), np.full((2, 2), 0.5), np.full((2, 2, 2), 0.5),
        np.broadcast_to(lp, (2, 2, 2, 2)), np.broadcast_to(rp, (2, 2, 2, 2)),
    )
    for i, x in enumerate(("a", "a'")):
        for j, y in enumerate(("b", "b'")):
            assert np.abs(m.joint_array(x, y) - np.outer(lp[i], rp[j])).max() <= 1e-15
    assert chsh_exact(m).x_bi <= 2 + 1e-9


def test_m3_rejects_unnormalized_tables():
    m = build_alpha_m3(AlphaConstruction())
    bad = np.array(m.xi_table.values)
    bad[0, 0] = [0.6, 0.6]
    with pytest.raises(ValidationError):
        m.replace(xi=m.xi_table.replace(bad))


# alpha construction -----------------------------------------------------------

@pytest.mark.parametrize(
    "alphas, expected",
    [
        ((1, 1, 1, 1, 1, 1, 1, 0), 4.0),
        ((1, 1, 1, 1, 1, 1, 0, 1), 4.0),
        ((1, 1, 1, 1, 1, 1, 1, 1), 2.0),
        ((0.5,) * 8, 0.0),
    ],
)
def test_alpha_examples(alphas, expected):
    report = chsh_exact(build_alpha_m3(AlphaConstruction(alphas)))
    assert report.x_bi == expected
    # hand-written tables, summed by loops
    assert oracles.chsh_of_tables(oracles.alpha_tables_by_hand(alphas)) == expected


def test_alpha_first_pair_saturates():
    m = build_alpha_m3(AlphaConstruction())
    j = m.joint("a", "b")
    assert j.p_pp == 1.0
    assert j.correlation == 1.0
    assert m.joint("a'", "b'").correlation == -1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8))
def test_alpha_joint_two_term_form(alphas):
    m = build_alpha_m3(AlphaConstruction(tuple(alphas)))
    pairs = [("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'")]
    for i, (x, y) in enumerate(pairs):
        a1, a2 = alphas[2 * i], alphas[2 * i + 1]
        j = m.joint(x, y)
        assert j.p_pp == pytest.approx(a1 * a2, abs=1e-12)
        assert j.p_mm == pytest.approx((1 - a1) * (1 - a2), abs=1e-12)


def test_selection_completion_is_forced():
    # the fixed entries plus distinct triples leave exactly one completion
    fixed = {"left": {"a": 1}, "right": {"b": 1, "b'": 2}, "xi": {(1, 1): 1, (1, 2): 2}}
    valid = []
    for la, x21, x22 in itertools.product((1, 2), repeat=3):
        try:
            SelectionTables(
                left={**fixed["left"], "a'": la},
                right=fixed["right"],
                xi={**fixed["xi"], (2, 1): x21, (2, 2): x22},
            )
        except ConstructionError:
            continue
        valid.append((la, x21, x22))
    assert valid == [(2, 2, 1)]
    sel = SelectionTables.standard()
    assert sel.left["a'"] == 2 and sel.xi[(2, 1)] == 2 and sel.xi[(2, 2)] == 1


def test_bad_selection_raises():
    with pytest.raises(ConstructionError):
        SelectionTables(left={"a": 1, "a'": 1})
    with pytest.raises(ConstructionError):
        SelectionTables(xi={(1, 1): 1, (1, 2): 1, (2, 1): 1, (2, 2): 1})
    with pytest.raises(ConstructionError):
        AlphaConstruction((1, 1, 1))
    with pytest.raises(ConstructionError):
        AlphaConstruction((2, 1, 1, 1, 1, 1, 1, 1))


# measurement-independence ratio ---------------------------------------------------

def test_mi_ratio_examples():
    m = build_alpha_m3(AlphaConstruction())
    # P(l2=1|b') = 0, numerator P(1|a) P(1|b) = 1
    assert mi_ratio(m, (1, 1, 1), "a", "b", "a", "b'") == math.inf
    assert mi_ratio(m, (1, 1, 1), "a", "b", "a", "b") == 1.0
    assert is_indeterminate(mi_ratio(m, (2, 2, 1), "a", "b", "a", "b"))


def test_mi_ratio_setting_independent_backgrounds():
    rng = np.random.default_rng(2)
    bg = rng.random(2)
    bg = np.array([bg / bg.sum()] * 2)
    base = random_model("M3", SeededStream(4))
    m = base.replace(left_bg=base.left_bg_table.replace(bg), right_bg=base.right_bg_table.replace(bg))
    for hidden in itertools.product((1, 2), repeat=3):
        for x, y, xp, yp in itertools.product(("a", "a'"), ("b", "b'"), ("a", "a'"), ("b", "b'")):
            assert mi_ratio(m, hidden, x, y, xp, yp) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_mi_ratio_m1_is_one(seed):
    m = random_model("M1", SeededStream(seed))
    for lam in m.lambda_support:
        assert mi_ratio(m, (lam,), "a", "b", "a'", "b'") == 1.0


def test_mi_ratio_m2_generic_instance_differs_from_one():
    # backgrounds that follow the settings make P(l1, l2 | x, y) setting dependent
    m = random_model("M2", SeededStream(0), n_lambda=3)
    ratios = [mi_ratio(m, (l1, l2), "a", "b", "a'", "b'") for l1 in (1, 2, 3) for l2 in (1, 2, 3)]
    assert any(abs(r - 1.0) > 1e-6 for r in ratios)
