"""Tarski iteration of the best-response operator T_k on utility profiles.

A profile assigns each agent one of its achievable values. ``T_k`` sends a
profile ``u`` to the profile where every agent gets the best value it can
secure in a coalition of at most ``k`` agents while leaving each partner
``j`` at least ``u_j``. ``T_k`` is antitone, so ``T_k`` squared is monotone
and iterating it from the endowment profile climbs to a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .model import (
    Allocation,
    Economy,
    check_discrete_TU,
    check_injective,
    check_strictly_monotone,
)
from .oracle import StructuredAllocation
from .ttc import TTCResult, housing_check
from .values import NEG_INF, ExtValue

Profile = tuple[ExtValue, ...]  # aligned with Economy.agents


class PreconditionError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    """A structural guarantee failed; the payload shows where."""

    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


class CycleTooLong(InvariantViolation):
    pass


def leq(u: Sequence[ExtValue], v: Sequence[ExtValue]) -> bool:
    return all(a <= b for a, b in zip(u, v))


def _popcount(m: int) -> int:
    return bin(m).count("1")


def _minimize(masks) -> list[int]:
    kept: list[int] = []
    for m in sorted(set(masks), key=lambda x: (_popcount(x), x)):
        if not any(k & m == k for k in kept):
            kept.append(m)
    return kept


@dataclass(eq=False)
class TContext:
    economy: Economy
    k: int
    achievable: dict[str, list[ExtValue]] = field(init=False)
    inverse: dict[str, dict[ExtValue, int]] = field(init=False)
    _memo: dict = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        e = self.economy
        if not 1 <= self.k <= len(e.agents):
            raise ValueError(f"k must lie between 1 and {len(e.agents)}")
        bad = [a for a in e.agents if not check_injective(e, a)]
        if bad:
            raise PreconditionError(f"utilities are not injective for agents {bad}")
        self.achievable = {}
        self.inverse = {}
        for a in e.agents:
            table = e.table(a)
            inv = {v: m for m, v in enumerate(table) if v is not NEG_INF}
            self.inverse[a] = inv
            self.achievable[a] = sorted(inv)
        self._coalitions = {
            a: [
                c
                for size in range(1, self.k + 1)
                for c in combinations(e.agents, size)
                if a in c
            ]
            for a in e.agents
        }

    @property
    def agents(self) -> tuple[str, ...]:
        return self.economy.agents

    def bottom(self) -> Profile:
        """The endowment profile."""
        return tuple(self.economy.endowment_value(a) for a in self.agents)

    def bundle(self, agent: str, value: ExtValue) -> frozenset[str]:
        try:
            return self.economy.bundle_of(self.inverse[agent][value])
        except KeyError:
            raise ValueError(f"{value!r} is not an achievable value of agent {agent}") from None

    def as_dict(self, u: Profile) -> dict[str, ExtValue]:
        return dict(zip(self.agents, u))

    # -- partner feasibility ---------------------------------------------

    def _minimal_bundles(self, agent: str, floor: ExtValue) -> list[int]:
        key = ("min", agent, floor)
        if key not in self._memo:
            table = self.economy.table(agent)
            self._memo[key] = _minimize(m for m, v in enumerate(table) if v >= floor)
        return self._memo[key]

    def _partner_masks(self, coalition: tuple[str, ...], agent: str, u: dict[str, ExtValue]) -> tuple[int, list[int]]:
        partners = [j for j in coalition if j != agent]
        key = ("partners", coalition, agent, tuple(u[j] for j in partners))
        if key not in self._memo:
            pool = self.economy.coalition_mask(coalition)
            states = [0]
            for j in partners:
                options = [b for b in self._minimal_bundles(j, u[j]) if not b & ~pool]
                states = _minimize(m | b for m in states for b in options if not m & b)
                if not states:
                    break
            self._memo[key] = (pool, states)
        return self._memo[key]


def b_set(ctx: TContext, i: str, u: Profile) -> frozenset[ExtValue]:
    """Values ``i`` reaches in some coalition of size <= k that keeps partners at ``u``."""
    ud = ctx.as_dict(u)
    table = ctx.economy.table(i)
    out: set[ExtValue] = set()
    for c in ctx._coalitions[i]:
        pool, masks = ctx._partner_masks(c, i, ud)
        for used in masks:
            rest = pool & ~used
            sub = rest
            while True:
                out.add(table[sub])
                if sub == 0:
                    break
                sub = (sub - 1) & rest
    return frozenset(out)


def _best(ctx: TContext, i: str, ud: dict[str, ExtValue]) -> ExtValue:
    best_sub = ctx.economy.best_subset_table(i)
    best: ExtValue = NEG_INF
    for c in ctx._coalitions[i]:
        pool, masks = ctx._partner_masks(c, i, ud)
        for used in masks:
            cand = best_sub[pool & ~used]
            if cand > best:
                best = cand
    return best


def apply_T(ctx: TContext, u: Profile) -> Profile:
    ud = ctx.as_dict(u)
    return tuple(_best(ctx, i, ud) for i in ctx.agents)


@dataclass
class TTrace:
    iterates: list[Profile]
    fixed_point: Profile

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    def to_json(self, agents: Sequence[str]) -> list[dict[str, str]]:
        from .values import format_value

        return [{a: format_value(v) for a, v in zip(agents, it)} for it in self.iterates]


def iterate_to_fixed_point(ctx: TContext, max_iterations: int | None = None) -> TTrace:
    """Iterate T from the endowment profile until two even iterates agree."""
    iterates = [ctx.bottom()]
    limit = max_iterations if max_iterations is not None else 10_000
    while True:
        iterates.append(apply_T(ctx, iterates[-1]))
        iterates.append(apply_T(ctx, iterates[-1]))
        if iterates[-1] == iterates[-3]:
            return TTrace(iterates, iterates[-1])
        if len(iterates) > limit:
            raise InvariantViolation("T-iteration did not settle", iterates[-1])


def check_T_fixed_point(ctx: TContext, u: Profile) -> Allocation | None:
    """The allocation a fixed point of T names, or None when ``u != Tu``."""
    if apply_T(ctx, u) != tuple(u):
        return None
    x = Allocation({a: ctx.bundle(a, v) for a, v in zip(ctx.agents, u)})
    if not x.is_disjoint():
        raise InvariantViolation("fixed point of T does not name an allocation", x)
    return x


@dataclass(frozen=True)
class CyclePairing:
    profile: Profile
    image: Profile  # T applied to profile
    A1: tuple[str, ...]
    A2: tuple[str, ...]
    pairs: tuple[tuple[str, str], ...]

    def to_json(self) -> dict:
        return {"A1": list(self.A1), "A2": list(self.A2), "pairs": [list(p) for p in self.pairs]}


def _realized(ctx: TContext, i: str, vi: ExtValue, j: str, vj: ExtValue) -> bool:
    e = ctx.economy
    pool = e.coalition_mask([i, j])
    mi, mj = ctx.inverse[i].get(vi), ctx.inverse[j].get(vj)
    if mi is None or mj is None:
        return False
    return not (mi & mj) and not ((mi | mj) & ~pool)


def classify_and_pair(ctx: TContext, u: Profile, check_preconditions: bool = True) -> CyclePairing:
    """Split agents by ``u_i == (Tu)_i`` and pair the rest into 2-cycles."""
    if ctx.k != 2:
        raise PreconditionError("cycle pairing is defined for k = 2")
    e = ctx.economy
    if check_preconditions:
        flat = [a for a in e.agents if not check_strictly_monotone(e, a)]
        if flat:
            raise PreconditionError(f"utilities not strictly monotone for agents {flat}")
        dtu = check_discrete_TU(e)
        if not dtu:
            raise PreconditionError(f"discrete transferable utility fails: {dtu.witness}")
    u = tuple(u)
    tu = apply_T(ctx, u)
    if apply_T(ctx, tu) != u or not leq(u, tu):
        raise PreconditionError("profile is not a fixed point of T^2 below its image")
    A1 = tuple(a for a, x, y in zip(ctx.agents, u, tu) if x == y)
    A2 = tuple(a for a, x, y in zip(ctx.agents, u, tu) if x < y)
    ud, tud = ctx.as_dict(u), ctx.as_dict(tu)
    succ: dict[str, str] = {}
    for i in A2:
        targets = [j for j in A2 if j != i and _realized(ctx, i, tud[i], j, ud[j])]
        if len(targets) != 1:
            raise InvariantViolation(f"agent {i} has {len(targets)} trading partners in A2", targets)
        succ[i] = targets[0]
    if sorted(succ.values()) != sorted(A2):
        raise InvariantViolation("partner map on A2 is not a permutation", succ)
    pairs = []
    done: set[str] = set()
    for start in A2:
        if start in done:
            continue
        cycle = [start]
        while succ[cycle[-1]] != start:
            cycle.append(succ[cycle[-1]])
        done.update(cycle)
        if len(cycle) != 2:
            raise CycleTooLong(f"cycle of length {len(cycle)} in A2", cycle)
        pairs.append(tuple(sorted(cycle, key=e.agent_index.__getitem__)))
    return CyclePairing(u, tu, A1, A2, tuple(pairs))


def construct_bargaining_allocation(ctx: TContext, pairing: CyclePairing) -> StructuredAllocation:
    """A1 agents keep the bundles ``u`` names; each pair's first member takes its T-value."""
    e = ctx.economy
    ud, tud = ctx.as_dict(pairing.profile), ctx.as_dict(pairing.image)
    bundles = {a: ctx.bundle(a, ud[a]) for a in pairing.A1}
    for first, second in pairing.pairs:
        bundles[first] = ctx.bundle(first, tud[first])
        bundles[second] = ctx.bundle(second, ud[second])

    # coalitions of A1: agents linked through the owners of what they consume
    parent = {a: a for a in pairing.A1}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in pairing.A1:
        for obj in bundles[a]:
            o = e.owner(obj)
            if o not in parent:
                raise InvariantViolation(f"agent {a} in A1 consumes {obj} owned outside A1", (a, obj))
            ra, ro = find(a), find(o)
            if ra != ro:
                parent[max(ra, ro, key=e.agent_index.__getitem__)] = min(ra, ro, key=e.agent_index.__getitem__)
    groups: dict[str, list[str]] = {}
    for a in pairing.A1:
        groups.setdefault(find(a), []).append(a)
    structure = [tuple(g) for g in groups.values()] + [tuple(p) for p in pairing.pairs]
    structure.sort(key=lambda c: e.agent_index[c[0]])
    allocation = Allocation({a: bundles[a] for a in e.agents})
    xs = StructuredAllocation(allocation, tuple(structure))
    try:
        xs.validate(e)
    except ValueError as exc:
        raise InvariantViolation(f"constructed allocation is invalid: {exc}", xs) from exc
    return xs


def ttc_equivalence_trace(ctx: TContext, ttc: TTCResult) -> bool:
    """Even iterates of T freeze each TTC round's agents at their TTC house."""
    e = ctx.economy
    housing_check(e)
    if ctx.k != len(e.agents):
        raise PreconditionError("the TTC comparison uses coalitions of every size")
    trace = iterate_to_fixed_point(ctx)
    iterates = list(trace.iterates)
    need = 2 * len(ttc.rounds) + 2
    while len(iterates) < need:
        iterates.append(apply_T(ctx, iterates[-1]))
    iterates.append(apply_T(ctx, iterates[-1]))
    pos = e.agent_index
    for r, members in enumerate(ttc.rounds, start=1):
        for i in members:
            target = e.value(i, [ttc.assignment[i]])
            if any(it[pos[i]] != target for it in iterates[2 * r - 1 :]):
                return False
    return True
