"""Exhaustive S-allocation enumeration over rank-encoded utilities.

Every solution concept here is ordinal, so each agent's values are replaced
by their rank among that agent's distinct values. Ranks of different agents
are never compared with each other.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .model import Economy, SizeLimitError
from .values import ExtValue

DEFAULT_BUDGET = 2_000_000
BUDGET_ENV = "DISCRETE_EXCHANGE_BUDGET"


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_BUDGET


class BudgetExceeded(SizeLimitError):
    pass


def check_budget(n_agents: int, n_objects: int, budget: int | None = None) -> int:
    count = (n_agents + 1) ** n_objects
    limit = default_budget() if budget is None else budget
    if count > limit:
        raise BudgetExceeded(
            f"enumeration of {count} assignments exceeds budget {limit}", estimate=count
        )
    return count


@dataclass(frozen=True)
class RankTable:
    values: list[ExtValue]  # distinct values, ascending
    ranks: np.ndarray  # rank of each bundle mask

    def ceil_rank(self, value: ExtValue) -> int:
        """Smallest rank whose value is >= ``value``."""
        return bisect_left(self.values, value)


def rank_table(e: Economy, agent: str) -> RankTable:
    key = ("rank", agent)
    if key not in e._cache:
        table = e.table(agent)
        distinct = sorted(set(table))
        pos = {v: n for n, v in enumerate(distinct)}
        e._cache[key] = RankTable(distinct, np.array([pos[v] for v in table], dtype=np.int64))
    return e._cache[key]


def assignment_rows(n_members: int, n_pool: int) -> np.ndarray:
    """All maps pool position -> 0 (nobody) or member 1..n, in lexicographic order."""
    if n_pool == 0:
        return np.zeros((1, 0), dtype=np.int8)
    grid = np.indices((n_members + 1,) * n_pool, dtype=np.int8)
    return grid.reshape(n_pool, -1).T.copy()


def enumerate_coalition(
    e: Economy, coalition: Sequence[str], budget: int | None = None
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray, np.ndarray]:
    """Every S-allocation of ``coalition``.

    Returns ``(pool, rows, masks, ranks)``: the coalition's objects, the raw
    assignment rows, each member's bundle mask and each member's rank.
    """
    pool = tuple(o for o in e.objects if o in set().union(*(e.endowments[a] for a in coalition)))
    check_budget(len(coalition), len(pool), budget)
    rows = assignment_rows(len(coalition), len(pool))
    bits = np.array([1 << e.object_index[o] for o in pool], dtype=np.int64)
    masks = np.empty((rows.shape[0], len(coalition)), dtype=np.int64)
    ranks = np.empty_like(masks)
    for t, agent in enumerate(coalition):
        masks[:, t] = ((rows == t + 1) * bits).sum(axis=1) if len(pool) else 0
        ranks[:, t] = rank_table(e, agent).ranks[masks[:, t]]
    return pool, rows, masks, ranks


def decode_row(e: Economy, coalition: Sequence[str], pool: Sequence[str], row) -> dict[str, frozenset[str]]:
    out: dict[str, set[str]] = {a: set() for a in coalition}
    for obj, who in zip(pool, row):
        if who:
            out[coalition[who - 1]].add(obj)
    return {a: frozenset(b) for a, b in out.items()}


def pareto_maximal(vectors: np.ndarray) -> np.ndarray:
    """Boolean mask of the maximal rows of a set of distinct rows.

    Sweeps rows by decreasing coordinate sum: the first remaining row is
    maximal, and everything it dominates is dropped.
    """
    n = vectors.shape[0]
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    order = np.argsort(-vectors.sum(axis=1), kind="stable")
    remaining = order
    while len(remaining):
        top = remaining[0]
        keep[top] = True
        rest = remaining[1:]
        remaining = rest[~(vectors[rest] <= vectors[top]).all(axis=1)]
    return keep


@dataclass
class CoalitionFrontier:
    """Pareto-maximal outcomes of a coalition with one witness each."""

    economy: Economy
    coalition: tuple[str, ...]
    pool: tuple[str, ...]
    ranks: np.ndarray  # (f, |S|)
    rows: np.ndarray  # witness assignment rows, (f, |pool|)

    def __len__(self) -> int:
        return len(self.ranks)

    def witness(self, idx: int) -> dict[str, frozenset[str]]:
        return decode_row(self.economy, self.coalition, self.pool, self.rows[idx])

    def values(self, idx: int) -> tuple[ExtValue, ...]:
        return tuple(
            rank_table(self.economy, a).values[int(r)] for a, r in zip(self.coalition, self.ranks[idx])
        )

    def encode(self, values: Sequence[ExtValue]) -> list[int]:
        return [rank_table(self.economy, a).ceil_rank(v) for a, v in zip(self.coalition, values)]

    def first_dominating(self, need: Sequence[int], strict: bool = False) -> int | None:
        """First outcome at least ``need`` everywhere (strictly above, if ``strict``)."""
        if not len(self.ranks):
            return None
        need_arr = np.asarray(need)
        hits = (self.ranks > need_arr).all(axis=1) if strict else (self.ranks >= need_arr).all(axis=1)
        idx = np.flatnonzero(hits)
        return int(idx[0]) if len(idx) else None

    def first_weak_improvement(self, current: Sequence[int]) -> int | None:
        """First outcome weakly above ``current`` and strictly above somewhere."""
        if not len(self.ranks):
            return None
        cur = np.asarray(current)
        hits = (self.ranks >= cur).all(axis=1) & (self.ranks > cur).any(axis=1)
        idx = np.flatnonzero(hits)
        return int(idx[0]) if len(idx) else None


def coalition_frontier(e: Economy, coalition: Sequence[str], budget: int | None = None) -> CoalitionFrontier:
    coalition = tuple(a for a in e.agents if a in set(coalition))
    key = ("frontier", coalition)
    if key not in e._cache:
        pool, rows, _, ranks = enumerate_coalition(e, coalition, budget)
        uniq, first = np.unique(ranks, axis=0, return_index=True)
        keep = pareto_maximal(uniq)
        order = np.argsort(first[keep], kind="stable")
        e._cache[key] = CoalitionFrontier(
            e, coalition, pool, uniq[keep][order], rows[first[keep][order]]
        )
    return e._cache[key]


def dominated_by_any(ranks: np.ndarray, need: Sequence[int]) -> bool:
    """True when some row of ``ranks`` is at least ``need`` in every coordinate."""
    if not len(ranks):
        return False
    return bool((ranks >= np.asarray(need)).all(axis=1).any())


def iter_rows(
    e: Economy, coalition: Sequence[str], rows: np.ndarray, pool: Sequence[str]
) -> Iterator[dict[str, frozenset[str]]]:
    for row in rows:
        yield decode_row(e, coalition, pool, row)
