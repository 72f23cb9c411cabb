"""Brute-force ground truth for the stability notions of an exchange economy."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Mapping, Sequence

import numpy as np

from .enumeration import (
    coalition_frontier,
    decode_row,
    enumerate_coalition,
    pareto_maximal,
    rank_table,
)
from .model import (
    Allocation,
    CheckResult,
    Economy,
    SizeLimitError,
    coalitions,
    is_s_allocation,
)
from .values import ExtValue

__all__ = [
    "Allocation",
    "BalancedCollection",
    "BargainingCertificate",
    "Block",
    "NTUGame",
    "StructuredAllocation",
    "build_ntu_game",
    "check_balanced",
    "check_ordinal_convexity",
    "enumerate_allocations",
    "find_block",
    "minimal_balanced_collections",
    "ntu_weak_core",
    "pairwise_bargaining_set",
    "pairwise_stable_set",
    "strong_core",
    "weak_core",
]

NTU_MAX_AGENTS = 4


def enumerate_allocations(e: Economy, budget: int | None = None) -> Iterator[Allocation]:
    """Every allocation, each object going to one agent or to nobody."""
    pool, rows, _, _ = enumerate_coalition(e, e.agents, budget)
    for row in rows:
        yield Allocation(decode_row(e, e.agents, pool, row))


@dataclass(frozen=True)
class Block:
    coalition: tuple[str, ...]
    allocation: dict[str, frozenset[str]]


def _ranks_of(e: Economy, agents: Sequence[str], values: Mapping[str, ExtValue]) -> list[int]:
    return [rank_table(e, a).ceil_rank(values[a]) for a in agents]


def find_block(e: Economy, x: Allocation, strong: bool) -> Block | None:
    """First coalition (by size, then agent order) that blocks ``x``."""
    values = x.values(e)
    for s in coalitions(e.agents):
        front = coalition_frontier(e, s)
        current = _ranks_of(e, s, values)
        idx = front.first_dominating(current, strict=True) if strong else front.first_weak_improvement(current)
        if idx is not None:
            return Block(s, front.witness(idx))
    return None


def _blocked_vectors(e: Economy, vectors: np.ndarray, strong: bool, max_size: int | None = None,
                     chunk: int = 2048) -> np.ndarray:
    blocked = np.zeros(len(vectors), dtype=bool)
    for s in coalitions(e.agents, max_size):
        front = coalition_frontier(e, s).ranks
        if not len(front):
            continue
        cols = [e.agent_index[a] for a in s]
        for start in range(0, len(vectors), chunk):
            cur = vectors[start : start + chunk][:, cols][:, None, :]
            if strong:
                hit = (front[None] > cur).all(axis=2).any(axis=1)
            else:
                hit = ((front[None] >= cur).all(axis=2) & (front[None] > cur).any(axis=2)).any(axis=1)
            blocked[start : start + chunk] |= hit
    return blocked


def _allocations_where(e: Economy, keep_vector: np.ndarray, pool, rows, inverse) -> list[Allocation]:
    return [Allocation(decode_row(e, e.agents, pool, rows[r])) for r in np.flatnonzero(keep_vector[inverse])]


def _grand(e: Economy, budget: int | None):
    pool, rows, _, ranks = enumerate_coalition(e, e.agents, budget)
    uniq, inverse = np.unique(ranks, axis=0, return_inverse=True)
    return pool, rows, uniq, inverse.reshape(-1)


def weak_core(e: Economy, budget: int | None = None) -> list[Allocation]:
    """Allocations no coalition strongly blocks, in enumeration order."""
    pool, rows, uniq, inverse = _grand(e, budget)
    return _allocations_where(e, ~_blocked_vectors(e, uniq, strong=True), pool, rows, inverse)


def strong_core(e: Economy, budget: int | None = None) -> list[Allocation]:
    """Allocations no coalition weakly blocks."""
    pool, rows, uniq, inverse = _grand(e, budget)
    return _allocations_where(e, ~_blocked_vectors(e, uniq, strong=False), pool, rows, inverse)


def weak_core_nonempty(e: Economy, budget: int | None = None) -> bool:
    _, _, uniq, _ = _grand(e, budget)
    return bool((~_blocked_vectors(e, uniq, strong=True)).any())


def _ir_mask(e: Economy, vectors: np.ndarray) -> np.ndarray:
    floor = np.array(_ranks_of(e, e.agents, {a: e.endowment_value(a) for a in e.agents}))
    return (vectors >= floor).all(axis=1)


def pairwise_stable_set(e: Economy, budget: int | None = None) -> list[Allocation]:
    """Individually rational allocations no pair weakly blocks."""
    pool, rows, uniq, inverse = _grand(e, budget)
    keep = _ir_mask(e, uniq)
    pairs_block = np.zeros(len(uniq), dtype=bool)
    for s in combinations(e.agents, 2):
        front = coalition_frontier(e, s).ranks
        cols = [e.agent_index[a] for a in s]
        cur = uniq[:, cols][:, None, :]
        pairs_block |= ((front[None] >= cur).all(axis=2) & (front[None] > cur).any(axis=2)).any(axis=1)
    return _allocations_where(e, keep & ~pairs_block, pool, rows, inverse)


# ---------------------------------------------------------------------------
# pairwise bargaining set


@dataclass(frozen=True)
class StructuredAllocation:
    """An allocation plus the trading coalitions that produced it."""

    allocation: Allocation
    structure: tuple[tuple[str, ...], ...]

    def coalition_of(self, agent: str) -> tuple[str, ...]:
        for c in self.structure:
            if agent in c:
                return c
        raise KeyError(agent)

    def validate(self, e: Economy) -> None:
        members = [a for c in self.structure for a in c]
        if sorted(members) != sorted(e.agents):
            raise ValueError("coalition structure is not a partition of the agents")
        if set(self.allocation.bundles) != set(e.agents):
            raise ValueError("allocation must assign a bundle to every agent")
        if not self.allocation.is_disjoint():
            raise ValueError("allocation bundles overlap")
        for c in self.structure:
            if not is_s_allocation(e, c, {a: self.allocation[a] for a in c}):
                raise ValueError(f"coalition {c} does not trade within its own endowments")

    def to_json(self, e: Economy) -> dict:
        return {"allocation": self.allocation.to_json(e), "structure": [list(c) for c in self.structure]}


@dataclass
class BargainingCertificate:
    member: bool
    objections_checked: int
    unanswered: tuple[tuple[str, str], dict[str, frozenset[str]]] | None = None

    def __bool__(self) -> bool:
        return self.member


def pairwise_bargaining_set(e: Economy, xs: StructuredAllocation) -> BargainingCertificate:
    """Whether every pairwise objection to ``xs`` meets a pairwise counterobjection.

    Only Pareto-maximal objections are examined: a counterobjection to a
    larger objection also answers every objection it dominates.
    """
    if not isinstance(xs, StructuredAllocation):
        raise TypeError("the bargaining-set oracle needs a StructuredAllocation")
    xs.validate(e)
    values = xs.allocation.values(e)
    base = dict(zip(e.agents, _ranks_of(e, e.agents, values)))
    home = dict(zip(e.agents, _ranks_of(e, e.agents, {a: e.endowment_value(a) for a in e.agents})))
    pairs = list(combinations(e.agents, 2))
    checked = 0
    for pair in pairs:
        front = coalition_frontier(e, pair)
        cur = np.array([base[a] for a in pair])
        objecting = np.flatnonzero((front.ranks >= cur).all(axis=1) & (front.ranks > cur).any(axis=1))
        if not len(objecting):
            continue
        reverted = {h for a in pair for h in xs.coalition_of(a)} - set(pair)
        for idx in objecting:
            checked += 1
            xbar = {h: (home[h] if h in reverted else base[h]) for h in e.agents}
            xbar.update(zip(pair, (int(r) for r in front.ranks[idx])))
            answered = False
            for other in pairs:
                if len(set(other) & set(pair)) != 1:
                    continue
                counter = coalition_frontier(e, other).first_weak_improvement([xbar[a] for a in other])
                if counter is not None:
                    answered = True
                    break
            if not answered:
                return BargainingCertificate(False, checked, (pair, front.witness(int(idx))))
    return BargainingCertificate(True, checked)


# ---------------------------------------------------------------------------
# NTU games


def coalition_key(coalition: Sequence[str]) -> str:
    return ",".join(coalition)


@dataclass(frozen=True)
class NTUGame:
    """Finite generators per coalition; V(S) is their downward closure.

    Vectors are aligned with the coalition's agents in game order. Coordinates
    outside the coalition are unconstrained. V(empty) is {0}.
    """

    agents: tuple[str, ...]
    generators: Mapping[tuple[str, ...], tuple[tuple[ExtValue, ...], ...]]

    def __post_init__(self) -> None:
        canon = {}
        for s, gens in self.generators.items():
            key = tuple(a for a in self.agents if a in set(s))
            if len(key) != len(s) or not key:
                raise ValueError(f"bad coalition {s!r}")
            for g in gens:
                if len(g) != len(key):
                    raise ValueError(f"generator {g!r} does not match coalition {key!r}")
            canon[key] = tuple(tuple(g) for g in gens)
        missing = [c for c in coalitions(self.agents) if c not in canon]
        if missing:
            raise ValueError(f"no generators for coalitions {missing}")
        object.__setattr__(self, "generators", canon)

    def contains(self, coalition: Sequence[str], u: Mapping[str, ExtValue]) -> bool:
        """Membership of ``u`` (only coalition coordinates matter) in V(S)."""
        key = tuple(a for a in self.agents if a in set(coalition))
        if not key:
            return all(u[a] <= 0 for a in u)
        return any(all(g_i >= u[a] for g_i, a in zip(g, key)) for g in self.generators[key])


def build_ntu_game(e: Economy, budget: int | None = None) -> NTUGame:
    gens = {}
    for s in coalitions(e.agents):
        front = coalition_frontier(e, s, budget)
        gens[s] = tuple(front.values(i) for i in range(len(front)))
    return NTUGame(e.agents, gens)


@dataclass(frozen=True)
class BalancedCollection:
    coalitions: tuple[tuple[int, ...], ...]
    weights: tuple[Fraction, ...]

    def weight_sums(self, n: int) -> list[Fraction]:
        return [sum((w for c, w in zip(self.coalitions, self.weights) if i in c), Fraction(0)) for i in range(n)]


def _solve_exact(columns: Sequence[Sequence[int]], n: int) -> list[Fraction] | None:
    """Unique solution of sum_c delta_c * columns[c] = 1, or None."""
    k = len(columns)
    rows = [[Fraction(columns[c][i]) for c in range(k)] + [Fraction(1)] for i in range(n)]
    pivot_cols = []
    r = 0
    for c in range(k):
        pivot = next((i for i in range(r, n) if rows[i][c] != 0), None)
        if pivot is None:
            return None  # dependent columns: weights not unique
        rows[r], rows[pivot] = rows[pivot], rows[r]
        p = rows[r][c]
        rows[r] = [x / p for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivot_cols.append(c)
        r += 1
    if any(rows[i][k] != 0 for i in range(r, n)):
        return None
    return [rows[i][k] for i in range(k)]


_MBC_CACHE: dict[int, list[BalancedCollection]] = {}


def minimal_balanced_collections(n: int) -> list[BalancedCollection]:
    """Supports of the vertices of {delta >= 0 : sum over S containing i of delta_S = 1}.

    Coalitions are tuples of agent positions ``0..n-1``.
    """
    if n > NTU_MAX_AGENTS:
        raise SizeLimitError(f"minimal balanced collections limited to {NTU_MAX_AGENTS} agents",
                             estimate=2 ** (2**n - 1))
    if n in _MBC_CACHE:
        return list(_MBC_CACHE[n])
    coals = coalitions(tuple(range(n)))
    out = []
    for size in range(1, n + 1):
        for family in combinations(coals, size):
            cols = [[1 if i in c else 0 for i in range(n)] for c in family]
            weights = _solve_exact(cols, n)
            if weights is not None and all(w > 0 for w in weights):
                out.append(BalancedCollection(family, tuple(weights)))
    _MBC_CACHE[n] = out
    return list(out)


# -- rank encoding of games ----------------------------------------------------

_FREE = np.iinfo(np.int64).max


class _EncodedGame:
    def __init__(self, g: NTUGame):
        self.game = g
        self.n = len(g.agents)
        per_agent: list[set] = [set() for _ in g.agents]
        for s, gens in g.generators.items():
            for vec in gens:
                for a, v in zip(s, vec):
                    per_agent[g.agents.index(a)].add(v)
        self.values = [sorted(vals) for vals in per_agent]
        self.pos = [{v: r for r, v in enumerate(vals)} for vals in self.values]
        self.cols = {s: [g.agents.index(a) for a in s] for s in g.generators}
        self.gens = {
            s: np.array([[self.pos[c][v] for c, v in zip(self.cols[s], vec)] for vec in gens], dtype=np.int64).reshape(
                len(gens), len(s)
            )
            for s, gens in g.generators.items()
        }

    def intersection_maxima(self, family: Sequence[tuple[str, ...]]) -> np.ndarray:
        """Maximal points of the intersection of V(S) over ``family``; free coords stay _FREE."""
        cur = np.full((1, self.n), _FREE, dtype=np.int64)
        for s in family:
            gens = self.gens[s]
            if not len(gens):
                return np.empty((0, self.n), dtype=np.int64)
            cols = self.cols[s]
            new = np.repeat(cur, len(gens), axis=0)
            tiled = np.tile(gens, (len(cur), 1))
            new[:, cols] = np.minimum(new[:, cols], tiled)
            new = np.unique(new, axis=0)
            cur = new[pareto_maximal(new)]
        return cur

    def member(self, s: tuple[str, ...], point: np.ndarray) -> bool:
        gens = self.gens[s]
        return bool(len(gens)) and bool((gens >= point[self.cols[s]]).all(axis=1).any())

    def decode(self, point: np.ndarray, cols: Sequence[int] | None = None) -> dict[str, ExtValue]:
        cols = range(self.n) if cols is None else cols
        return {self.game.agents[c]: self.values[c][int(point[c])] for c in cols}


def _guard(g: NTUGame) -> None:
    if len(g.agents) > NTU_MAX_AGENTS:
        raise SizeLimitError(f"NTU checks limited to {NTU_MAX_AGENTS} agents", estimate=2 ** len(g.agents))


def check_balanced(g: NTUGame) -> CheckResult:
    """Scarf's balancedness condition, checked at the maximal points of each intersection.

    Those points lie on the grid of achievable values, and membership in
    V(A) is downward closed, so they are the only candidates that matter.
    """
    _guard(g)
    enc = _EncodedGame(g)
    grand = tuple(g.agents)
    for bc in minimal_balanced_collections(len(g.agents)):
        family = [tuple(g.agents[i] for i in c) for c in bc.coalitions]
        for point in enc.intersection_maxima(family):
            if not enc.member(grand, point):
                return CheckResult(
                    False,
                    {"collection": family, "weights": list(bc.weights), "u": enc.decode(point)},
                )
    return CheckResult(True)


def check_ordinal_convexity(g: NTUGame) -> CheckResult:
    """V(S) and V(S') intersect inside V(S & S') union V(S | S') for every pair."""
    _guard(g)
    enc = _EncodedGame(g)
    cs = coalitions(g.agents)
    for a, s in enumerate(cs):
        for s2 in cs[a + 1 :]:
            ss, ss2 = set(s), set(s2)
            if ss <= ss2 or ss2 <= ss:
                continue
            meet = tuple(x for x in g.agents if x in ss & ss2)
            join = tuple(x for x in g.agents if x in ss | ss2)
            join_cols = [g.agents.index(x) for x in join]
            for point in enc.intersection_maxima([s, s2]):
                if meet and enc.member(meet, point):
                    continue
                if not meet and all(v <= 0 for v in enc.decode(point, join_cols).values()):
                    continue
                if enc.member(join, point):
                    continue
                return CheckResult(False, {"S": s, "S_prime": s2, "u": enc.decode(point, join_cols)})
    return CheckResult(True)


def ntu_weak_core(g: NTUGame) -> list[tuple[ExtValue, ...]]:
    """Maximal generators of V(A) that no coalition improves on strictly for all members."""
    _guard(g)
    enc = _EncodedGame(g)
    grand = tuple(g.agents)
    gens = enc.gens[grand]
    if not len(gens):
        return []
    uniq = np.unique(gens, axis=0)
    maximal = uniq[pareto_maximal(uniq)]
    out = []
    for point in maximal:
        blocked = False
        for s, sg in enc.gens.items():
            if len(sg) and (sg > point[enc.cols[s]]).all(axis=1).any():
                blocked = True
                break
        if not blocked:
            out.append(tuple(enc.values[c][int(point[c])] for c in range(enc.n)))
    return sorted(out)


def allocation_is_in_weak_core(e: Economy, x: Allocation) -> bool:
    return find_block(e, x, strong=True) is None
