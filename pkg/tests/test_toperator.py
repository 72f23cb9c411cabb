import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import brute
from discrete_exchange import instances
from discrete_exchange.model import AdditiveUtility, Economy, is_individually_rational
from discrete_exchange.oracle import pairwise_bargaining_set
from discrete_exchange.toperator import (
    CycleTooLong,
    PreconditionError,
    TContext,
    apply_T,
    b_set,
    check_T_fixed_point,
    classify_and_pair,
    construct_bargaining_allocation,
    iterate_to_fixed_point,
    leq,
    ttc_equivalence_trace,
)
from discrete_exchange.ttc import run_ttc, ttc_allocation
from discrete_exchange.values import NEG_INF

F = Fraction


def injective_economy(seed):
    rng = random.Random(seed)
    kind = rng.choice(("free", "common", "housing", "table"))
    n = rng.randint(2, 3)
    if kind == "housing":
        return instances.random_housing(n, rng)
    if kind == "table":
        return instances.random_injective_table(n, rng.randint(n, 3), rng)
    return instances.random_additive(n, rng.randint(n, 4), rng, common=kind == "common")


def additive_free(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 4)
    return instances.random_additive(n, rng.randint(n, min(6, n + 2)), rng, common=False)


def two_agent():
    w = {"a": F(1), "b": F(2)}
    return Economy.create(["a", "b"], ["1", "2"], {"1": ["a"], "2": ["b"]},
                          {"1": AdditiveUtility(w), "2": AdditiveUtility(w)})


def test_b_set_small_example():
    ctx = TContext(two_agent(), 2)
    assert b_set(ctx, "1", (F(1), F(2))) == {F(0), F(1)}
    assert apply_T(ctx, (F(1), F(2))) == (F(1), F(2))


def test_context_preconditions():
    with pytest.raises(PreconditionError):
        TContext(instances.random_dichotomous(2, 3, random.Random(0)), 2)
    with pytest.raises(ValueError):
        TContext(two_agent(), 3)
    ctx = TContext(two_agent(), 1)
    with pytest.raises(ValueError):
        ctx.bundle("1", F(7))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_T_matches_brute_force(seed, data):
    e = injective_economy(seed)
    ctx = TContext(e, data.draw(st.integers(1, len(e.agents))))
    u = tuple(data.draw(st.sampled_from(ctx.achievable[a])) for a in e.agents)
    expected = brute.apply_T(e, ctx.k, ctx.as_dict(u))
    assert apply_T(ctx, u) == tuple(expected[a] for a in e.agents)
    for i in e.agents:
        assert max(b_set(ctx, i, u)) == expected[i]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_T_is_antitone(seed, data):
    e = injective_economy(seed)
    ctx = TContext(e, data.draw(st.integers(1, len(e.agents))))
    hi = tuple(data.draw(st.sampled_from(ctx.achievable[a])) for a in e.agents)
    lo = tuple(data.draw(st.sampled_from([x for x in ctx.achievable[a] if x <= h])) for a, h in zip(e.agents, hi))
    assert leq(apply_T(ctx, hi), apply_T(ctx, lo))
    for i in e.agents:
        assert b_set(ctx, i, hi) <= b_set(ctx, i, lo)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_iterates_interleave(seed):
    e = injective_economy(seed)
    ctx = TContext(e, len(e.agents))
    trace = iterate_to_fixed_point(ctx)
    evens, odds = trace.iterates[0::2], trace.iterates[1::2]
    assert all(leq(a, b) for a, b in zip(evens, evens[1:]))
    assert all(leq(b, a) for a, b in zip(odds, odds[1:]))
    assert all(leq(a, b) for a in evens for b in odds)
    assert apply_T(ctx, apply_T(ctx, trace.fixed_point)) == trace.fixed_point


def test_trace_json_has_one_entry_per_iterate():
    e = instances.random_housing(3, random.Random(2))
    ctx = TContext(e, 3)
    trace = iterate_to_fixed_point(ctx)
    assert len(trace.to_json(e.agents)) == trace.iterations + 1
    assert trace.iterations % 2 == 0


def test_housing_fixed_point_is_ttc():
    for seed in range(20):
        e = instances.random_housing(4, random.Random(seed))
        ctx = TContext(e, 4)
        ttc = run_ttc(e)
        assert ttc_equivalence_trace(ctx, ttc)
        assert check_T_fixed_point(ctx, iterate_to_fixed_point(ctx).fixed_point) == ttc_allocation(e, ttc)


def test_ttc_trace_needs_full_coalitions():
    e = instances.random_housing(3, random.Random(0))
    with pytest.raises(PreconditionError):
        ttc_equivalence_trace(TContext(e, 2), run_ttc(e))


def test_non_fixed_point_names_no_allocation():
    ctx = TContext(two_agent(), 2)
    assert check_T_fixed_point(ctx, (NEG_INF, NEG_INF)) is None


def test_common_weights_leave_no_one_to_pair():
    for seed in range(10):
        rng = random.Random(seed)
        e = instances.random_additive(3, 5, rng, common=True)
        ctx = TContext(e, 2)
        pairing = classify_and_pair(ctx, iterate_to_fixed_point(ctx).fixed_point)
        assert pairing.A2 == () and pairing.profile == pairing.image
        xs = construct_bargaining_allocation(ctx, pairing)
        assert is_individually_rational(e, xs.allocation)
        assert pairwise_bargaining_set(e, xs)


def test_pairing_without_preconditions():
    e = additive_free(1)
    ctx = TContext(e, 2)
    fp = iterate_to_fixed_point(ctx).fixed_point
    with pytest.raises(PreconditionError):
        classify_and_pair(ctx, fp)
    pairing = classify_and_pair(ctx, fp, check_preconditions=False)
    assert pairing.to_json() == {"A1": ["3"], "A2": ["1", "2"], "pairs": [["1", "2"]]}
    xs = construct_bargaining_allocation(ctx, pairing)
    assert ("1", "2") in xs.structure
    assert pairwise_bargaining_set(e, xs)


def test_long_cycle_is_reported():
    e = additive_free(63)
    ctx = TContext(e, 2)
    with pytest.raises(CycleTooLong) as info:
        classify_and_pair(ctx, iterate_to_fixed_point(ctx).fixed_point, check_preconditions=False)
    assert sorted(info.value.payload) == ["2", "3", "4"]


def test_pairing_rejects_wrong_inputs():
    ctx = TContext(two_agent(), 1)
    with pytest.raises(PreconditionError):
        classify_and_pair(ctx, ctx.bottom())
    ctx = TContext(two_agent(), 2)
    with pytest.raises(PreconditionError):
        classify_and_pair(ctx, (F(3), F(3)))
