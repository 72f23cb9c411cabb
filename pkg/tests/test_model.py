import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from discrete_exchange import instances
from discrete_exchange.model import (
    AdditiveUtility,
    Allocation,
    CategoricalUtility,
    DichotomousUtility,
    Economy,
    HousingUtility,
    check_discrete_TU,
    check_gains_from_trade,
    check_injective,
    check_strictly_monotone,
    coalitions,
    endowment_allocation,
    gains_from_trade_merge,
    is_allocation,
    is_individually_rational,
    is_s_allocation,
    pareto_frontier_pair,
    validate_economy,
)
from discrete_exchange.values import NEG_INF


def small_additive(w1, w2):
    return Economy.create(
        ["a", "b"],
        ["1", "2"],
        {"1": ["a"], "2": ["b"]},
        {"1": AdditiveUtility(w1), "2": AdditiveUtility(w2)},
    )


def test_utility_families():
    cat = {"x": "k1", "y": "k1", "z": "k2"}
    assert DichotomousUtility(frozenset("xy")).value(frozenset("xyz")) == 2
    assert CategoricalUtility(frozenset("xz"), cat).value(frozenset("xz")) == 2
    assert CategoricalUtility(frozenset("xz"), cat).value(frozenset("xy")) is NEG_INF
    assert HousingUtility(("h2", "h1")).value(frozenset({"h2"})) == 2
    assert HousingUtility(("h2", "h1")).value(frozenset()) is NEG_INF
    assert AdditiveUtility({"x": Fraction(1, 3)}).value(frozenset("x")) == Fraction(1, 3)


def test_masks_round_trip():
    e = instances.example1()
    for m in (0, 5, 63):
        assert e.mask_of(e.bundle_of(m)) == m
    with pytest.raises(ValueError):
        e.mask_of(["nope"])


def test_validation_reports_every_problem():
    e = Economy.create(
        ["a", "b", "c"],
        ["1", "2"],
        {"1": ["a"], "2": ["a"]},
        {"1": DichotomousUtility(frozenset("a")), "2": AdditiveUtility({"a": Fraction(1)})},
    )
    text = " | ".join(validate_economy(e).violations)
    assert "overlapping endowments" in text
    assert "object b is in no endowment" in text
    assert "additive weight missing" in text


def test_bundled_examples_are_valid():
    for name in ("ex1", "ex2", "konishi", "shoes-gft"):
        assert validate_economy(instances.load_example(name)).ok


def test_allocation_predicates():
    e = instances.example1()
    x = instances.example1_allocations()["X"]
    assert x.is_disjoint() and is_allocation(e, x.bundles)
    assert is_individually_rational(e, x)
    assert is_individually_rational(e, endowment_allocation(e))
    assert is_s_allocation(e, ["1", "3"], {"1": {"l1"}, "3": {"r3", "r1"}})
    assert not is_s_allocation(e, ["1", "3"], {"1": {"l2"}, "3": set()})
    assert not Allocation({"1": {"a"}, "2": {"a"}}).is_disjoint()


def test_injective_and_monotone():
    e = instances.random_additive(3, 4, random.Random(0), common=False)
    assert all(check_injective(e, a) and check_strictly_monotone(e, a) for a in e.agents)
    d = instances.random_dichotomous(2, 3, random.Random(0))
    assert not check_injective(d, "1")
    h = instances.random_housing(3, random.Random(0))
    assert check_strictly_monotone(h, "1")
    assert not check_strictly_monotone(h, "1", strict=True)


def test_pareto_frontier_small():
    e = small_additive({"a": Fraction(1), "b": Fraction(2)}, {"a": Fraction(1), "b": Fraction(2)})
    f = pareto_frontier_pair(e, "1", "2")
    assert [(t, f(t)) for t in f.thetas] == [(0, 3), (1, 2), (2, 1), (3, 0)]
    assert f(Fraction(4)) is NEG_INF


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_pareto_frontier_is_antitone(seed):
    rng = random.Random(seed)
    e = instances.random_additive(2, rng.randint(2, 4), rng, common=False)
    f = pareto_frontier_pair(e, "1", "2")
    values = [f(t) for t in f.thetas]
    assert values == sorted(values, reverse=True)


def test_common_weights_satisfy_discrete_tu():
    for seed in range(20):
        rng = random.Random(seed)
        assert check_discrete_TU(instances.random_additive(3, 4, rng, common=True))


def test_discrete_tu_witness():
    # agent 1 loses 8 when agent 2's floor rises by 1
    e = small_additive({"a": Fraction(8), "b": Fraction(1)}, {"a": Fraction(1), "b": Fraction(2)})
    res = check_discrete_TU(e)
    assert not res and set(res.witness) == {"i", "j", "theta", "theta_prime"}


def test_coalition_order():
    assert coalitions(("1", "2", "3"), 2) == [("1",), ("2",), ("3",), ("1", "2"), ("1", "3"), ("2", "3")]


def test_gains_from_trade_on_shoes():
    e = instances.shoes_gft()
    res = check_gains_from_trade(e)
    assert not res
    assert gains_from_trade_merge(e, res.witness["X"], res.witness["X_prime"]) is None
    w = instances.SHOES_GFT_WITNESS
    assert gains_from_trade_merge(e, w["X"], w["X_prime"]) is None


def test_two_agents_always_have_gains_from_trade():
    for seed in range(10):
        rng = random.Random(seed)
        assert check_gains_from_trade(instances.random_injective_table(2, 3, rng))
