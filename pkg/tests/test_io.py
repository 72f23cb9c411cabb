import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from discrete_exchange import instances, io
from discrete_exchange.rounding import FractionalMatrix


def economies(seed):
    rng = random.Random(seed)
    return [
        instances.random_dichotomous(3, 4, rng),
        instances.random_categorical(3, 2, 3, rng),
        instances.random_housing(3, rng),
        instances.random_additive(2, 3, rng, common=False),
        instances.random_injective_table(2, 2, rng),
    ]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_economy_round_trip(seed):
    for e in economies(seed):
        data = io.economy_to_json(e)
        back = io.economy_from_json(json.loads(io.dumps(data)))
        assert io.economy_to_json(back) == data
        assert all(back.table(a) == e.table(a) for a in e.agents)


def test_examples_round_trip():
    for name in ("ex1", "konishi"):
        e = instances.load_example(name)
        assert io.economy_to_json(io.economy_from_json(io.economy_to_json(e))) == io.economy_to_json(e)
    g = instances.roommate()
    assert io.ntu_to_json(io.ntu_from_json(io.ntu_to_json(g))) == io.ntu_to_json(g)


def test_matrix_round_trip():
    m = FractionalMatrix(["1"], ["a", "b"], [[Fraction(1, 3), Fraction(2, 3)]], [1])
    back, cats, agent_of = io.matrix_from_json(io.matrix_to_json(m, {"k": ["a", "b"]}))
    assert back == m and cats == {"k": ["a", "b"]} and agent_of is None


def test_syntax_error_has_position():
    with pytest.raises(io.FormatError) as info:
        io.parse_json('{"objects": [\n  1,,\n]}')
    assert info.value.line == 2 and info.value.col is not None


@pytest.mark.parametrize(
    "doc,message",
    [
        ({"agents": []}, "missing field 'objects'"),
        ({"objects": [], "agents": ["1"], "endowments": {}, "utilities": {"1": {"kind": "weird"}}}, "unknown utility kind"),
        ({"objects": ["a"], "agents": ["1"], "endowments": {"1": ["a"]},
          "utilities": {"1": {"kind": "additive", "weights": {"a": "x/y"}}}}, "bad value"),
        ({"objects": ["a"], "agents": ["1"], "endowments": {"1": ["a"]},
          "utilities": {"1": {"kind": "categorical", "acceptable": ["a"]}}}, "needs economy categories"),
    ],
)
def test_format_errors(doc, message):
    with pytest.raises(io.FormatError, match=message):
        io.economy_from_json(doc)


def test_load_dispatches_on_kind(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(io.dumps(io.ntu_to_json(instances.roommate())))
    assert io.load(p).agents == ("1", "2", "3")
    p.write_text('{"kind": "other"}')
    with pytest.raises(io.FormatError):
        io.load(p)
    p.write_text("[1]")
    with pytest.raises(io.FormatError):
        io.load(p)
