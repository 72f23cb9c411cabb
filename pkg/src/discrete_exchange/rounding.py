"""Rounding fractional assignment matrices to allocations that meet targets.

A balanced collection of coalitions, each with an allocation of its own
endowments, averages into a fractional matrix: rows are agents, columns
objects, and row ``i`` carries at least ``t_i`` units of acceptable objects.
The routines here turn such a matrix into a real allocation that still
gives every agent ``t_i`` acceptable objects (at most one per category in
the categorical setting). All arithmetic is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from .enumeration import coalition_frontier
from .model import Allocation, CategoricalUtility, DichotomousUtility, Economy, is_s_allocation
from .oracle import BalancedCollection, _EncodedGame, build_ntu_game, minimal_balanced_collections
from .values import ExtValue, ceil_value

ZERO, ONE = Fraction(0), Fraction(1)


class RoundingError(RuntimeError):
    """An invariant broke during rounding; carries the pass and a snapshot."""

    def __init__(self, message: str, step: int = 0, snapshot=None):
        super().__init__(f"pass {step}: {message}")
        self.step = step
        self.snapshot = snapshot


class WitnessError(ValueError):
    pass


def _fractional(x: Fraction) -> bool:
    return ZERO < x < ONE


@dataclass
class FractionalMatrix:
    rows: list[str]  # row labels
    cols: list[str]  # objects
    entries: list[list[Fraction]]
    targets: list[int]

    def __post_init__(self) -> None:
        if len(self.entries) != len(self.rows) or len(self.targets) != len(self.rows):
            raise ValueError("row count mismatch")
        if any(len(r) != len(self.cols) for r in self.entries):
            raise ValueError("column count mismatch")
        self.entries = [[Fraction(x) for x in r] for r in self.entries]
        if any(x < 0 or x > 1 for r in self.entries for x in r):
            raise ValueError("entries must lie in [0, 1]")

    def copy(self) -> FractionalMatrix:
        return FractionalMatrix(list(self.rows), list(self.cols), [list(r) for r in self.entries], list(self.targets))

    def fractional_count(self) -> int:
        return sum(_fractional(x) for r in self.entries for x in r)

    def is_integral(self) -> bool:
        return self.fractional_count() == 0

    def row_sum(self, i: int) -> Fraction:
        return sum(self.entries[i], ZERO)

    def col_sum(self, j: int) -> Fraction:
        return sum((r[j] for r in self.entries), ZERO)

    def ones(self, i: int) -> int:
        return sum(x == 1 for x in self.entries[i])

    def to_json(self) -> dict:
        return {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "targets": list(self.targets),
            "entries": [[str(x) for x in r] for r in self.entries],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> FractionalMatrix:
        return cls(
            list(data["rows"]),
            list(data["cols"]),
            [[Fraction(str(x)) for x in r] for r in data["entries"]],
            [int(t) for t in data["targets"]],
        )


@dataclass
class RowSplitMap:
    agent_of: dict[str, str] = field(default_factory=dict)

    @classmethod
    def identity(cls, rows: Sequence[str]) -> RowSplitMap:
        return cls({r: r for r in rows})


def targets_from_profile(u):
    """Round every utility up to an integer target."""
    if isinstance(u, Mapping):
        return {a: ceil_value(v) for a, v in u.items()}
    return tuple(ceil_value(v) for v in u)


def _good_items(e: Economy, agent: str) -> frozenset[str]:
    util = e.utilities[agent]
    if isinstance(util, DichotomousUtility):
        return util.good
    if isinstance(util, CategoricalUtility):
        return util.acceptable
    raise TypeError(f"agent {agent} has a {util.kind} utility; rounding needs dichotomous or categorical")


def build_matrix(
    e: Economy,
    bc: BalancedCollection,
    witness: Mapping[tuple[str, ...], Mapping[str, frozenset[str]]],
    targets: Mapping[str, int],
) -> FractionalMatrix:
    """Weighted sum of the witnesses' assignment matrices, acceptable objects only."""
    n = len(e.agents)
    pos = e.object_index
    entries = [[ZERO] * len(e.objects) for _ in range(n)]
    for c, w in zip(bc.coalitions, bc.weights):
        s = tuple(e.agents[k] for k in c)
        xs = witness[s]
        if not is_s_allocation(e, s, xs):
            raise WitnessError(f"witness for {s} is not an allocation of its endowments")
        for agent in s:
            if e.value(agent, xs[agent]) < targets[agent]:
                raise WitnessError(f"witness for {s} leaves agent {agent} below target {targets[agent]}")
            row = entries[e.agent_index[agent]]
            for obj in xs[agent] & _good_items(e, agent):
                row[pos[obj]] += w
    return FractionalMatrix(list(e.agents), list(e.objects), entries, [targets[a] for a in e.agents])


# ---------------------------------------------------------------------------
# cycles in the support graph


def _close_cycle(path: list[tuple[str, int]], vertex: tuple[str, int]) -> list[tuple[int, int]]:
    """Entries (row, col) of the cycle formed when ``vertex`` reappears on ``path``."""
    start = path.index(vertex)
    loop = path[start:] + [vertex]
    cells = []
    for a, b in zip(loop, loop[1:]):
        r, c = (a[1], b[1]) if a[0] == "r" else (b[1], a[1])
        cells.append((r, c))
    return cells


def _shift(entries: list[list[Fraction]], cycle: list[tuple[int, int]], eps: Fraction) -> None:
    for n, (r, c) in enumerate(cycle):
        entries[r][c] += eps if n % 2 == 0 else -eps


def _entry_eps(entries: list[list[Fraction]], cycle: list[tuple[int, int]]) -> Fraction:
    return min((ONE - entries[r][c]) if n % 2 == 0 else entries[r][c] for n, (r, c) in enumerate(cycle))


# ---------------------------------------------------------------------------
# dichotomous rounding


def _check_dichotomous(m: FractionalMatrix, step: int) -> None:
    for i, t in enumerate(m.targets):
        if m.row_sum(i) < t:
            raise RoundingError(f"row {m.rows[i]} sums below its target {t}", step, m.to_json())
    for j, o in enumerate(m.cols):
        if m.col_sum(j) > 1:
            raise RoundingError(f"column {o} sums above 1", step, m.to_json())


def _dichotomous_move(m: FractionalMatrix, i: int) -> None:
    b = m.entries
    ncols = len(m.cols)
    j = next(c for c in range(ncols) if _fractional(b[i][c]))
    path: list[tuple[str, int]] = [("r", i), ("c", j)]
    r, c = i, j
    while True:
        others = [h for h in range(len(m.rows)) if h != r and b[h][c] > 0]
        if not others:
            b[r][c] = ONE
            return
        h = others[0]
        if m.ones(h) >= m.targets[h]:
            eps = min(ONE - b[r][c], b[h][c])
            b[r][c] += eps
            b[h][c] -= eps
            return
        if ("r", h) in path:
            cycle = _close_cycle(path, ("r", h))
            _shift(b, cycle, _entry_eps(b, cycle))
            return
        path.append(("r", h))
        l = next(x for x in range(ncols) if x != c and _fractional(b[h][x]))
        if ("c", l) in path:
            cycle = _close_cycle(path, ("c", l))
            _shift(b, cycle, _entry_eps(b, cycle))
            return
        path.append(("c", l))
        r, c = h, l


def round_dichotomous(
    m: FractionalMatrix, on_step: Callable[[int, FractionalMatrix], None] | None = None
) -> FractionalMatrix:
    """Integral matrix with at least ``t_i`` ones per row and column sums at most one."""
    m = m.copy()
    _check_dichotomous(m, 0)
    step = 0
    count = m.fractional_count()
    while count:
        step += 1
        short = next((i for i, t in enumerate(m.targets) if m.ones(i) < t), None)
        if short is None:
            # every target met by ones already; the leftover mass is surplus
            for row in m.entries:
                for c, x in enumerate(row):
                    if _fractional(x):
                        row[c] = ZERO
        else:
            _dichotomous_move(m, short)
        _check_dichotomous(m, step)
        new = m.fractional_count()
        if new >= count:
            raise RoundingError("fractional entries did not decrease", step, m.to_json())
        count = new
        if on_step:
            on_step(step, m)
    for i, t in enumerate(m.targets):
        if m.ones(i) < t:
            raise RoundingError(f"row {m.rows[i]} ends below its target", step, m.to_json())
    return m


def matrix_allocation(m: FractionalMatrix, agents: Sequence[str]) -> Allocation:
    bundles: dict[str, set[str]] = {a: set() for a in agents}
    for label, row in zip(m.rows, m.entries):
        for obj, x in zip(m.cols, row):
            if x == 1:
                bundles[label].add(obj)
    return Allocation(bundles)


# ---------------------------------------------------------------------------
# categorical rounding


@dataclass
class _Row:
    label: str
    agent: str
    target: int
    cells: dict[str, Fraction]  # object -> positive mass


@dataclass
class CategoricalRun:
    allocation: Allocation
    passes: int
    fractional_counts: list[int]


class _CategoricalState:
    def __init__(self, m: FractionalMatrix, categories: Mapping[str, Sequence[str]], splits: RowSplitMap):
        self.cat_of = {o: k for k, objs in categories.items() for o in objs}
        missing = [o for o in m.cols if o not in self.cat_of]
        if missing:
            raise ValueError(f"objects without a category: {missing}")
        self.rows: list[_Row] = []
        for label, target, row in zip(m.rows, m.targets, m.entries):
            cells = {o: x for o, x in zip(m.cols, row) if x > 0}
            self.rows.append(_Row(label, splits.agent_of.get(label, label), target, cells))
        self.assigned: dict[str, set[str]] = {r.agent: set() for r in self.rows}
        self._fresh = 0

    def cat_sum(self, row: _Row, k: str) -> Fraction:
        return sum((x for o, x in row.cells.items() if self.cat_of[o] == k), ZERO)

    def fractional_count(self) -> int:
        return sum(_fractional(x) for r in self.rows for x in r.cells.values())

    def col_rows(self, obj: str) -> list[_Row]:
        return [r for r in self.rows if r.cells.get(obj, ZERO) > 0]

    def check(self, step: int) -> None:
        cols: dict[str, Fraction] = {}
        for r in self.rows:
            if sum(r.cells.values(), ZERO) < r.target:
                raise RoundingError(f"row {r.label} sums below its target {r.target}", step, self.snapshot())
            per_cat: dict[str, Fraction] = {}
            for o, x in r.cells.items():
                if not ZERO < x <= ONE:
                    raise RoundingError(f"entry ({r.label}, {o}) = {x} out of range", step, self.snapshot())
                per_cat[self.cat_of[o]] = per_cat.get(self.cat_of[o], ZERO) + x
                cols[o] = cols.get(o, ZERO) + x
            if any(s > 1 for s in per_cat.values()):
                raise RoundingError(f"row {r.label} holds more than one unit of a category", step, self.snapshot())
        if any(s > 1 for s in cols.values()):
            raise RoundingError("a column sums above 1", step, self.snapshot())

    def snapshot(self) -> dict:
        return {
            "rows": [{"label": r.label, "agent": r.agent, "target": r.target,
                      "cells": {o: str(x) for o, x in r.cells.items()}} for r in self.rows],
            "assigned": {a: sorted(b) for a, b in self.assigned.items()},
        }

    # preprocessing moves; each returns True when it changed something

    def split(self) -> bool:
        for n, r in enumerate(self.rows):
            for k in sorted({self.cat_of[o] for o in r.cells}):
                if self.cat_sum(r, k) != 1:
                    continue
                inside = {o: x for o, x in r.cells.items() if self.cat_of[o] == k}
                outside = {o: x for o, x in r.cells.items() if self.cat_of[o] != k}
                if r.target > 1 or (r.target == 1 and outside):
                    self._fresh += 1
                    rest = _Row(f"{r.label}/{self._fresh}", r.agent, r.target - 1, outside)
                    self.rows[n] = _Row(r.label, r.agent, 1, inside)
                    self.rows.insert(n + 1, rest)
                    return True
        return False

    def drop(self) -> bool:
        keep = [r for r in self.rows if r.target > 0]
        changed = len(keep) != len(self.rows)
        self.rows = keep
        return changed

    def lone(self) -> bool:
        for obj in sorted({o for r in self.rows for o in r.cells}):
            holders = self.col_rows(obj)
            if len(holders) == 1 and holders[0].cells[obj] < 1:
                r = holders[0]
                k = self.cat_of[obj]
                r.cells = {o: x for o, x in r.cells.items() if self.cat_of[o] != k}
                r.cells[obj] = ONE
                return True
        return False

    def assign(self) -> bool:
        for r in self.rows:
            for obj, x in list(r.cells.items()):
                if x == 1:
                    del r.cells[obj]
                    r.target -= 1
                    self.assigned[r.agent].add(obj)
                    return True
        return False

    def preprocess(self) -> None:
        while self.split() or self.drop() or self.lone() or self.assign():
            pass

    def rounding_step(self, step: int) -> None:
        objs = sorted({o for r in self.rows for o in r.cells})
        ocol = {o: n for n, o in enumerate(objs)}
        b = [[r.cells.get(o, ZERO) for o in objs] for r in self.rows]
        start_row = next(n for n, r in enumerate(self.rows) if r.cells)
        start_col = ocol[min(self.rows[start_row].cells, key=ocol.__getitem__)]
        path: list[tuple[str, int]] = [("r", start_row), ("c", start_col)]
        r, c = start_row, start_col
        cycle = None
        while cycle is None:
            h = next((x for x in range(len(b)) if x != r and b[x][c] > 0), None)
            if h is None:
                raise RoundingError(f"column {objs[c]} has a single holder at rounding time", step, self.snapshot())
            if ("r", h) in path:
                cycle = _close_cycle(path, ("r", h))
                break
            path.append(("r", h))
            l = next((x for x in range(len(objs)) if x != c and b[h][x] > 0), None)
            if l is None:
                raise RoundingError(f"row {self.rows[h].label} has a single positive entry", step, self.snapshot())
            if ("c", l) in path:
                cycle = _close_cycle(path, ("c", l))
                break
            path.append(("c", l))
            r, c = h, l
        eps = _entry_eps(b, cycle)
        # row-category headroom where the cycle adds net mass
        delta: dict[tuple[int, str], int] = {}
        for n, (row, col) in enumerate(cycle):
            key = (row, self.cat_of[objs[col]])
            delta[key] = delta.get(key, 0) + (1 if n % 2 == 0 else -1)
        for (row, k), d in delta.items():
            if d > 0:
                eps = min(eps, (ONE - self.cat_sum(self.rows[row], k)) / d)
        if eps <= 0:
            raise RoundingError("no room to shift along the cycle", step, self.snapshot())
        _shift(b, cycle, eps)
        for row, col in cycle:
            cells = self.rows[row].cells
            obj = objs[col]
            if b[row][col] > 0:
                cells[obj] = b[row][col]
            else:
                cells.pop(obj, None)


def pass_bound(m: FractionalMatrix, n_agents: int, n_categories: int) -> int:
    return n_agents * len(m.cols) + n_agents * (n_categories - 1)


def round_categorical(
    m: FractionalMatrix,
    categories: Mapping[str, Sequence[str]],
    splits: RowSplitMap | None = None,
    on_step: Callable[[int, dict], None] | None = None,
) -> CategoricalRun:
    """Alternate preprocessing and cycle rounding until every row is served."""
    splits = splits or RowSplitMap.identity(m.rows)
    state = _CategoricalState(m, categories, splits)
    n_agents = len(set(splits.agent_of.get(r, r) for r in m.rows))
    bound = pass_bound(m, n_agents, len(categories))
    state.check(0)
    counts = [state.fractional_count()]
    state.preprocess()
    state.check(0)
    if state.fractional_count() > counts[-1]:
        raise RoundingError("preprocessing created fractional entries", 0, state.snapshot())
    counts.append(state.fractional_count())
    passes = 0
    while any(r.cells for r in state.rows):
        passes += 1
        if passes > bound:
            raise RoundingError(f"exceeded the pass bound {bound}", passes, state.snapshot())
        state.rounding_step(passes)
        state.check(passes)
        before = state.fractional_count()
        state.preprocess()
        state.check(passes)
        after = state.fractional_count()
        if after > before:
            raise RoundingError("preprocessing created fractional entries", passes, state.snapshot())
        counts.append(after)
        if on_step:
            on_step(passes, state.snapshot())
    unmet = [r.label for r in state.rows if r.target > 0]
    if unmet:
        raise RoundingError(f"rows {unmet} end below target", passes, state.snapshot())
    agents = list(dict.fromkeys(splits.agent_of.get(r, r) for r in m.rows))
    return CategoricalRun(Allocation({a: state.assigned[a] for a in agents}), passes, counts)


# ---------------------------------------------------------------------------
# end-to-end: balanced collections of an economy


@dataclass
class RoundingRun:
    collection: tuple[tuple[str, ...], ...]
    weights: tuple[Fraction, ...]
    profile: dict[str, ExtValue]
    targets: dict[str, int]
    matrix: FractionalMatrix
    allocation: Allocation
    passes: int
    fractional_counts: list[int]

    def meets_targets(self, e: Economy) -> bool:
        return all(e.value(a, self.allocation[a]) >= t for a, t in self.targets.items())


def balanced_rounding_runs(e: Economy, budget: int | None = None) -> Iterator[RoundingRun]:
    """Round every maximal point of every balanced intersection of the economy's game.

    Each point ``u`` lies in V(S) for every S of a minimal balanced
    collection; the first frontier outcome of S reaching ``ceil(u)`` is the
    witness. Dichotomous and categorical economies are supported.
    """
    kinds = e.utility_kinds()
    if kinds not in ({"dichotomous"}, {"categorical"}):
        raise TypeError("rounding supports purely dichotomous or purely categorical economies")
    categorical = kinds == {"categorical"}
    if categorical and e.categories is None:
        raise ValueError("categorical economy without categories")
    game = build_ntu_game(e, budget)
    enc = _EncodedGame(game)
    for bc in minimal_balanced_collections(len(e.agents)):
        family = [tuple(e.agents[i] for i in c) for c in bc.coalitions]
        for point in enc.intersection_maxima(family):
            u = enc.decode(point)
            t = targets_from_profile(u)
            witness = {}
            for s in family:
                front = coalition_frontier(e, s, budget)
                idx = front.first_dominating(front.encode([Fraction(t[a]) for a in s]))
                if idx is None:
                    raise WitnessError(f"no outcome of {s} reaches targets {t}")
                witness[s] = front.witness(idx)
            m = build_matrix(e, bc, witness, t)
            if categorical:
                run = round_categorical(m, e.categories)
                alloc, passes, counts = run.allocation, run.passes, run.fractional_counts
            else:
                counts = [m.fractional_count()]
                rounded = round_dichotomous(m, lambda _s, mm: counts.append(mm.fractional_count()))
                alloc, passes = matrix_allocation(rounded, e.agents), len(counts) - 1
            yield RoundingRun(tuple(family), bc.weights, u, t, m, alloc, passes, counts)


def lcm_of_denominators(weights: Sequence[Fraction]) -> int:
    return math.lcm(*(w.denominator for w in weights)) if weights else 1
