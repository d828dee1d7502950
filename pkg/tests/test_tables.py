import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellhv.core import ValidationError
from bellhv.analysis import random_model
from bellhv.models import (
    AlphaConstruction,
    ContinuousM3Model,
    HallModel,
    ProbabilityTable,
    SchemaError,
    SingletReference,
    Variable,
    build_alpha_m3,
    dump_model,
    load_model,
    model_from_dict,
    model_to_dict,
)
from bellhv.streams import SeededStream

L1 = Variable("l1", (1, 2))
X = Variable("x", ("a", "a'"))
XI = Variable("xi", (1, 2))


def test_table_rows_and_keys():
    t = ProbabilityTable.from_rows(L1, [X], {("a",): [1.0, 0.0], ("a'",): [0.25, 0.75]})
    assert t.name == "l1|x"
    assert t.prob(2, "a'") == 0.75
    assert t.key_string(("a'",)) == "x=a'"
    assert t.parse_key("x=a'") == ("a'",)
    assert list(t.keys()) == [("a",), ("a'",)]


def test_three_condition_key_format():
    s1 = Variable("s1", (1, -1))
    t = ProbabilityTable.from_function(s1, [XI, L1, X], lambda k, l1, x: [0.5, 0.5])
    assert t.key_string((1, 2, "a")) == "xi=1,l1=2,x=a"
    assert t.parse_key("xi=1,l1=2,x=a") == (1, 2, "a")


def test_unnormalized_row_rejected():
    with pytest.raises(ValidationError):
        ProbabilityTable.from_rows(L1, [X], {("a",): [0.5, 0.4], ("a'",): [0.5, 0.5]})
    with pytest.raises(ValidationError):
        ProbabilityTable.from_rows(L1, [X], {("a",): [1.5, -0.5], ("a'",): [0.5, 0.5]})


def test_residuals_report_the_fault():
    t = ProbabilityTable(L1, [X], np.array([[0.999, 0.0], [0.5, 0.5]]), validate=False)
    res = t.residuals()
    assert res["x=a"] == pytest.approx(1e-3)
    assert res["x=a'"] == 0.0


def test_deterministic_table():
    t = ProbabilityTable.deterministic(L1, [X], lambda x: 1 if x == "a" else 2)
    assert t.values.tolist() == [[1.0, 0.0], [0.0, 1.0]]


@pytest.mark.parametrize("kind", ["M1", "M2", "M3"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_model_round_trip(kind, seed):
    m = random_model(kind, SeededStream(seed))
    doc = json.loads(json.dumps(model_to_dict(m)))
    assert doc["schema"] == "bellhv/1"
    back = model_from_dict(doc)
    assert back == m


def test_m3_document_keys():
    doc = model_to_dict(build_alpha_m3(AlphaConstruction()))
    assert "xi=1,l1=2,x=a" in doc["tables"]["left"]["rows"]
    assert doc["tables"]["xi"]["rows"]["l1=1,l2=2"] == [0.0, 1.0]


def test_alpha_and_parameterless_round_trip(tmp_path):
    c = AlphaConstruction((1, 1, 1, 1, 1, 1, 0, 1))
    path = tmp_path / "alpha.json"
    dump_model(c, path)
    assert load_model(path) == c
    assert load_model(path, build_alpha=True) == build_alpha_m3(c)
    for m in (HallModel(), ContinuousM3Model(), SingletReference()):
        assert type(model_from_dict(model_to_dict(m))) is type(m)


def test_bad_documents_raise_schema_error():
    good = model_to_dict(random_model("M1", SeededStream(0)))
    with pytest.raises(SchemaError):
        model_from_dict({**good, "schema": "bellhv/2"})
    with pytest.raises(SchemaError):
        model_from_dict({"schema": "bellhv/1", "kind": "M4"})
    with pytest.raises(SchemaError):
        model_from_dict({"schema": "bellhv/1", "kind": "M1"})
    bad = json.loads(json.dumps(good))
    bad["tables"]["left"]["rows"]["x=c,lam=1"] = bad["tables"]["left"]["rows"].pop("x=a,lam=1")
    with pytest.raises(SchemaError):
        model_from_dict(bad)
    with pytest.raises(SchemaError):
        model_from_dict({"schema": "bellhv/1", "kind": "alpha", "alphas": [1, 1]})


def test_unnormalized_document_raises_validation_error():
    doc = model_to_dict(random_model("M2", SeededStream(0)))
    doc["tables"]["left_bg"]["rows"]["x=a"][0] += 0.01
    with pytest.raises(ValidationError):
        model_from_dict(doc)
    # the numbers are still readable without validation, for audits
    assert model_from_dict(doc, validate=False).kind == "M2"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6))
def test_table_dict_round_trip(weights):
    p = np.array(weights) / sum(weights)
    var = Variable("lam", tuple(range(1, len(p) + 1)))
    t = ProbabilityTable(var, (), p)
    assert ProbabilityTable.from_dict(json.loads(json.dumps(t.to_dict()))) == t
