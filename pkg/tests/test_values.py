from fractions import Fraction
import pickle

import pytest
from hypothesis import given, strategies as st

from discrete_exchange.values import NEG_INF, ceil_value, format_value, is_finite, parse_value


def test_neg_inf_is_below_everything():
    assert NEG_INF < Fraction(-10**9)
    assert not NEG_INF > Fraction(0)
    assert NEG_INF <= NEG_INF and NEG_INF >= NEG_INF
    assert max(NEG_INF, Fraction(3)) == 3
    assert not is_finite(NEG_INF)


def test_neg_inf_survives_pickle():
    assert pickle.loads(pickle.dumps(NEG_INF)) is NEG_INF


@pytest.mark.parametrize("raw,expected", [("3/4", Fraction(3, 4)), (7, Fraction(7)), ("-inf", NEG_INF), (" 2 ", Fraction(2))])
def test_parse(raw, expected):
    assert parse_value(raw) == expected


@pytest.mark.parametrize("raw", [True, 1.5, "abc", "1/0", None])
def test_parse_rejects(raw):
    with pytest.raises(ValueError):
        parse_value(raw)


@given(st.fractions())
def test_format_round_trip(x):
    assert parse_value(format_value(x)) == x


def test_ceil():
    assert ceil_value(Fraction(1, 2)) == 1
    assert ceil_value(Fraction(-1, 2)) == 0
    with pytest.raises(ValueError):
        ceil_value(NEG_INF)
