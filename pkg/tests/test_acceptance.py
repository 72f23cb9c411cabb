"""Acceptance criteria 1-11.

Each test prints a single ``PASS``/``FAIL`` line; the lines are repeated in
the pytest terminal summary. Run standalone with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import sys
from functools import cache

from discrete_exchange import instances
from discrete_exchange.model import (
    check_gains_from_trade,
    check_injective,
    is_individually_rational,
)
from discrete_exchange.oracle import (
    build_ntu_game,
    check_balanced,
    check_ordinal_convexity,
    find_block,
    ntu_weak_core,
    pairwise_bargaining_set,
    strong_core,
    weak_core,
    weak_core_nonempty,
)
from discrete_exchange.rounding import (
    RoundingError,
    balanced_rounding_runs,
    pass_bound,
    round_dichotomous,
)
from discrete_exchange.toperator import (
    TContext,
    apply_T,
    check_T_fixed_point,
    classify_and_pair,
    construct_bargaining_allocation,
    iterate_to_fixed_point,
    leq,
    ttc_equivalence_trace,
)
from discrete_exchange.ttc import run_ttc, ttc_allocation

REPORT: list[str] = []


def report(number: int, failures: list, detail: str) -> None:
    line = f"{'PASS' if not failures else 'FAIL'} criterion {number}: {detail}"
    if failures:
        line += f" ({len(failures)} failures, first: {failures[0]!r})"
    REPORT.append(line)
    print(line)
    assert not failures, line


# ---------------------------------------------------------------------------
# shared suites


@cache
def dichotomous_suite():
    out = []
    for seed in range(200):
        rng = random.Random(seed)
        n = rng.randint(2, 4)
        e = instances.random_dichotomous(n, rng.randint(n, 6), rng)
        out.append((seed, e, *_property_and_rounding(e)))
    return out


@cache
def categorical_suite():
    out = []
    for seed in range(200):
        rng = random.Random(10_000 + seed)
        n = rng.randint(2, 4)
        k = rng.randint(math.ceil(n / 3), 3)
        e = instances.random_categorical(n, k, 3, rng)
        out.append((seed, e, *_property_and_rounding(e)))
    return out


def _property_and_rounding(e):
    nonempty = weak_core_nonempty(e)
    balanced = check_balanced(build_ntu_game(e)).holds
    try:
        runs, error = list(balanced_rounding_runs(e)), None
    except RoundingError as exc:
        runs, error = [], exc
    return nonempty, balanced, runs, error


# ---------------------------------------------------------------------------
# worked examples


def test_criterion_01_example1_cores():
    e = instances.example1()
    xs = instances.example1_allocations()
    strong, weak = strong_core(e), weak_core(e)
    failures = []
    if strong != [xs["X"]]:
        failures.append(("strong core", [x.to_json(e) for x in strong]))
    failures += [(k, "not in weak core") for k in "XY" if xs[k] not in weak]
    report(1, failures, f"strong core = {{X}}, X and Y in a weak core of size {len(weak)}")


def test_criterion_02_example2_empty_core_and_blocks():
    e = instances.example2()
    xs = instances.example2_allocations()
    failures = []
    if weak_core(e):
        failures.append("weak core nonempty")
    for name, coalition in (("X", ("2", "3")), ("Y", ("1", "3")), ("Z", ("1", "2"))):
        block = find_block(e, xs[name], strong=True)
        if block is None or block.coalition != coalition:
            failures.append((name, None if block is None else block.coalition))
    report(2, failures, "weak core empty; X<-{2,3}, Y<-{1,3}, Z<-{1,2} certified")


def test_criterion_03_konishi():
    e = instances.konishi()
    failures = []
    if weak_core(e):
        failures.append("weak core nonempty")
    better = instances.konishi_value("1", ["l4", "r1"])
    worse = instances.konishi_value("1", ["l4", "r2"])
    if not (better == 6 and worse == 5):
        failures.append((better, worse))
    report(3, failures, f"weak core empty; agent 1 values (l4,r1)={better} > (l4,r2)={worse}")


def test_criterion_04_roommate():
    g = instances.roommate()
    failures = []
    if ntu_weak_core(g):
        failures.append("core nonempty")
    if check_balanced(g).holds:
        failures.append("game balanced")
    report(4, failures, "roommate core empty and game not balanced")


# ---------------------------------------------------------------------------
# property suites


def test_criterion_05_dichotomous():
    failures = []
    for seed, e, nonempty, balanced, runs, error in dichotomous_suite():
        if not (nonempty and balanced):
            failures.append((seed, nonempty, balanced))
    report(5, failures, f"{len(dichotomous_suite())} dichotomous economies: nonempty weak core, balanced game")


def test_criterion_06_categorical():
    failures = []
    runs_seen = 0
    for seed, e, nonempty, balanced, runs, error in categorical_suite():
        if not nonempty:
            failures.append((seed, "weak core empty"))
        if error is not None or not runs:
            failures.append((seed, str(error) if error else "no rounding run"))
        for run in runs:
            runs_seen += 1
            bound = pass_bound(run.matrix, len(e.agents), len(e.categories))
            if run.passes > bound or not run.meets_targets(e):
                failures.append((seed, run.passes, bound, run.targets))
    report(6, failures, f"{len(categorical_suite())} categorical economies, {runs_seen} rounding runs within the pass bound")


def test_criterion_07_gains_from_trade():
    accepted, failures = 0, []
    for seed in range(400):
        if accepted >= 30:
            break
        rng = random.Random(20_000 + seed)
        n = rng.randint(2, 3)
        e = instances.random_injective_table(n, rng.randint(n, min(6, n + 2)), rng)
        if not all(check_injective(e, a) for a in e.agents) or not check_gains_from_trade(e):
            continue
        accepted += 1
        g = build_ntu_game(e)
        checks = (check_balanced(g).holds, check_ordinal_convexity(g).holds, weak_core_nonempty(e))
        if not all(checks):
            failures.append((seed, checks))
    if accepted < 30:
        failures.append(f"only {accepted} instances accepted")
    report(7, failures, f"{accepted} accepted gains-from-trade economies: balanced, ordinally convex, nonempty core")


def test_criterion_08_ttc_equivalence():
    failures = []
    for seed in range(100):
        rng = random.Random(30_000 + seed)
        e = instances.random_housing(rng.randint(1, 6), rng)
        ttc = run_ttc(e)
        ctx = TContext(e, len(e.agents))
        fixed = check_T_fixed_point(ctx, iterate_to_fixed_point(ctx).fixed_point)
        if not ttc_equivalence_trace(ctx, ttc) or fixed != ttc_allocation(e, ttc):
            failures.append(seed)
    report(8, failures, "100 housing markets: T iteration tracks TTC and lands on its allocation")


def test_criterion_09_bargaining_pipeline():
    failures = []
    pairs = 0
    for seed in range(100):
        rng = random.Random(40_000 + seed)
        n = rng.randint(2, 4)
        e = instances.random_additive(n, rng.randint(n, 6), rng, common=True)
        ctx = TContext(e, 2)
        try:
            pairing = classify_and_pair(ctx, iterate_to_fixed_point(ctx).fixed_point)
            xs = construct_bargaining_allocation(ctx, pairing)
        except Exception as exc:  # any structural failure counts against the criterion
            failures.append((seed, repr(exc)))
            continue
        pairs += len(pairing.pairs)
        if not is_individually_rational(e, xs.allocation) or not pairwise_bargaining_set(e, xs):
            failures.append((seed, xs.to_json(e)))
    report(9, failures, f"100 common-weight economies: cycles of length 2 ({pairs} pairs), IR, in the bargaining set")


def _operator_economies(rng: random.Random):
    n = rng.randint(2, 4)
    kind = rng.choice(("free", "common", "housing", "table"))
    if kind == "housing":
        return instances.random_housing(n, rng)
    if kind == "table":
        n = min(n, 3)
        return instances.random_injective_table(n, rng.randint(n, 4), rng)
    return instances.random_additive(n, rng.randint(n, 5), rng, common=kind == "common")


def test_criterion_10_operator_laws():
    failures, sampled = [], 0
    for seed in range(100):
        rng = random.Random(50_000 + seed)
        e = _operator_economies(rng)
        ctx = TContext(e, rng.randint(1, len(e.agents)))
        for _ in range(5):
            hi = tuple(rng.choice(ctx.achievable[a]) for a in e.agents)
            lo = tuple(rng.choice([x for x in ctx.achievable[a] if x <= h]) for a, h in zip(e.agents, hi))
            sampled += 1
            if not leq(apply_T(ctx, hi), apply_T(ctx, lo)):
                failures.append((seed, "antitone", lo, hi))
        it = iterate_to_fixed_point(ctx).iterates
        it = it + [apply_T(ctx, it[-1]), apply_T(ctx, apply_T(ctx, it[-1]))]
        for m in range(0, len(it) - 3, 2):
            if not (leq(it[m], it[m + 2]) and leq(it[m + 3], it[m + 1]) and leq(it[m], it[m + 3])):
                failures.append((seed, "sandwich", m))
        evens, odds = it[0::2], it[1::2]
        if not all(leq(a, b) for a in evens for b in odds):
            failures.append((seed, "even below odd"))
    report(10, failures, f"{sampled} profile pairs antitone; sandwich chain on 100 traces")


def test_criterion_11_rounding_laws():
    failures, runs_seen = [], 0
    for seed, e, _, _, runs, error in dichotomous_suite():
        if error is not None:
            failures.append((seed, str(error)))
        for run in runs:
            runs_seen += 1
            counts = run.fractional_counts
            if any(b >= a for a, b in zip(counts, counts[1:])):
                failures.append((seed, "count not decreasing", counts))

            def check(_step, m, seed=seed):
                rows_ok = all(m.row_sum(i) >= t for i, t in enumerate(m.targets))
                cols_ok = all(m.col_sum(j) <= 1 for j in range(len(m.cols)))
                if not (rows_ok and cols_ok):
                    failures.append((seed, "invariant", _step))

            round_dichotomous(run.matrix, check)
    for seed, e, _, _, runs, error in categorical_suite():
        if error is not None:
            failures.append((seed, str(error)))
        for run in runs:
            runs_seen += 1
            if any(b > a for a, b in zip(run.fractional_counts, run.fractional_counts[1:])):
                failures.append((seed, "count increased", run.fractional_counts))
    report(11, failures, f"{runs_seen} rounding runs kept row/column invariants after every step")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
