"""Economies with indivisible objects, utility families and structural checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Any, ClassVar, Iterable, Mapping, Sequence

from .values import NEG_INF, ExtValue, is_finite

Bundle = frozenset  # frozenset[str]; set semantics


class UnknownObjectError(ValueError):
    """A bundle mentions an object the economy does not have."""


class SizeLimitError(RuntimeError):
    """An exhaustive computation would exceed its configured size guard."""

    def __init__(self, message: str, estimate: int):
        super().__init__(message)
        self.estimate = estimate


# ---------------------------------------------------------------------------
# utility families


class UtilityFunction:
    kind: ClassVar[str] = ""

    def value(self, bundle: frozenset[str]) -> ExtValue:
        raise NotImplementedError

    def referenced_objects(self) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True)
class TableUtility(UtilityFunction):
    """Explicit value for every bundle of the economy."""

    values: Mapping[frozenset[str], ExtValue]
    kind: ClassVar[str] = "table"

    def value(self, bundle: frozenset[str]) -> ExtValue:
        try:
            return self.values[frozenset(bundle)]
        except KeyError:
            raise ValueError(f"bundle {sorted(bundle)} missing from utility table") from None

    def referenced_objects(self) -> frozenset[str]:
        return frozenset().union(*self.values) if self.values else frozenset()


@dataclass(frozen=True)
class DichotomousUtility(UtilityFunction):
    """Counts the acceptable objects in a bundle."""

    good: frozenset[str]
    kind: ClassVar[str] = "dichotomous"

    def value(self, bundle: frozenset[str]) -> ExtValue:
        return Fraction(len(self.good.intersection(bundle)))

    def referenced_objects(self) -> frozenset[str]:
        return self.good


@dataclass(frozen=True)
class CategoricalUtility(UtilityFunction):
    """One unit per category holding an acceptable object.

    Bundles with two objects of one category are outside the consumption
    space and evaluate to ``-inf``.
    """

    acceptable: frozenset[str]
    category_of: Mapping[str, str]
    kind: ClassVar[str] = "categorical"

    def value(self, bundle: frozenset[str]) -> ExtValue:
        seen: set[str] = set()
        total = 0
        for obj in bundle:
            cat = self.category_of[obj]
            if cat in seen:
                return NEG_INF
            seen.add(cat)
            if obj in self.acceptable:
                total += 1
        return Fraction(total)

    def referenced_objects(self) -> frozenset[str]:
        return self.acceptable | frozenset(self.category_of)


@dataclass(frozen=True)
class AdditiveUtility(UtilityFunction):
    weights: Mapping[str, Fraction]
    kind: ClassVar[str] = "additive"

    def value(self, bundle: frozenset[str]) -> ExtValue:
        return sum((self.weights[o] for o in bundle), Fraction(0))

    def referenced_objects(self) -> frozenset[str]:
        return frozenset(self.weights)


@dataclass(frozen=True)
class HousingUtility(UtilityFunction):
    """Unit demand over houses; ``ranking`` lists houses best first."""

    ranking: tuple[str, ...]
    kind: ClassVar[str] = "housing"

    def value(self, bundle: frozenset[str]) -> ExtValue:
        if len(bundle) != 1:
            return NEG_INF
        (house,) = bundle
        return Fraction(len(self.ranking) - self.ranking.index(house))

    def referenced_objects(self) -> frozenset[str]:
        return frozenset(self.ranking)


# ---------------------------------------------------------------------------
# economy


@dataclass(frozen=True, eq=False)
class Economy:
    objects: tuple[str, ...]
    agents: tuple[str, ...]
    endowments: Mapping[str, frozenset[str]]
    utilities: Mapping[str, UtilityFunction]
    categories: Mapping[str, tuple[str, ...]] | None = None
    name: str = ""

    @classmethod
    def create(
        cls,
        objects: Iterable[str],
        agents: Iterable[str],
        endowments: Mapping[str, Iterable[str]],
        utilities: Mapping[str, UtilityFunction],
        categories: Mapping[str, Iterable[str]] | None = None,
        name: str = "",
    ) -> Economy:
        return cls(
            objects=tuple(objects),
            agents=tuple(agents),
            endowments={a: frozenset(b) for a, b in endowments.items()},
            utilities=dict(utilities),
            categories=None if categories is None else {k: tuple(v) for k, v in categories.items()},
            name=name,
        )

    # -- indexing ---------------------------------------------------------

    @cached_property
    def object_index(self) -> dict[str, int]:
        return {o: n for n, o in enumerate(self.objects)}

    @cached_property
    def agent_index(self) -> dict[str, int]:
        return {a: n for n, a in enumerate(self.agents)}

    def mask_of(self, bundle: Iterable[str]) -> int:
        mask = 0
        for o in bundle:
            try:
                mask |= 1 << self.object_index[o]
            except KeyError:
                raise UnknownObjectError(f"unknown object {o!r}") from None
        return mask

    def bundle_of(self, mask: int) -> frozenset[str]:
        return frozenset(o for n, o in enumerate(self.objects) if mask >> n & 1)

    def sorted_bundle(self, bundle: Iterable[str]) -> list[str]:
        """Members of ``bundle`` in canonical object order."""
        return sorted(bundle, key=self.object_index.__getitem__)

    @cached_property
    def endowment_masks(self) -> tuple[int, ...]:
        return tuple(self.mask_of(self.endowments[a]) for a in self.agents)

    def coalition_mask(self, coalition: Iterable[str]) -> int:
        mask = 0
        for a in coalition:
            mask |= self.endowment_masks[self.agent_index[a]]
        return mask

    def owner(self, obj: str) -> str:
        for a in self.agents:
            if obj in self.endowments[a]:
                return a
        raise UnknownObjectError(f"object {obj!r} has no owner")

    @cached_property
    def _cache(self) -> dict[Any, Any]:
        # memo space for enumeration helpers; never part of the value
        return {}

    # -- evaluation -------------------------------------------------------

    def value(self, agent: str, bundle: Iterable[str]) -> ExtValue:
        bundle = frozenset(bundle)
        unknown = bundle.difference(self.object_index)
        if unknown:
            raise UnknownObjectError(f"unknown objects {sorted(unknown)}")
        return self.utilities[agent].value(bundle)

    def table(self, agent: str) -> list[ExtValue]:
        """Values of ``agent`` for every bundle, indexed by bitmask."""
        key = ("table", agent)
        if key not in self._cache:
            util = self.utilities[agent]
            self._cache[key] = [util.value(self.bundle_of(m)) for m in range(1 << len(self.objects))]
        return self._cache[key]

    def best_subset_table(self, agent: str) -> list[ExtValue]:
        """``best[m]`` is the largest value over all sub-bundles of ``m``."""
        key = ("best", agent)
        if key not in self._cache:
            best = list(self.table(agent))
            for bit in range(len(self.objects)):
                step = 1 << bit
                for m in range(1 << len(self.objects)):
                    if m & step and best[m ^ step] > best[m]:
                        best[m] = best[m ^ step]
            self._cache[key] = best
        return self._cache[key]

    def endowment_value(self, agent: str) -> ExtValue:
        return self.table(agent)[self.endowment_masks[self.agent_index[agent]]]

    def utility_kinds(self) -> set[str]:
        return {u.kind for u in self.utilities.values()}


@dataclass(frozen=True)
class Allocation:
    """Pairwise disjoint bundles, one per agent."""

    bundles: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundles", {a: frozenset(b) for a, b in self.bundles.items()})

    def __hash__(self) -> int:
        return hash(frozenset(self.bundles.items()))

    def __getitem__(self, agent: str) -> frozenset[str]:
        return self.bundles[agent]

    def is_disjoint(self) -> bool:
        seen: set[str] = set()
        for bundle in self.bundles.values():
            if seen & bundle:
                return False
            seen |= bundle
        return True

    def values(self, economy: Economy) -> dict[str, ExtValue]:
        return {a: economy.value(a, b) for a, b in self.bundles.items()}

    def to_json(self, economy: Economy | None = None) -> dict[str, list[str]]:
        if economy is None:
            return {a: sorted(b) for a, b in self.bundles.items()}
        return {a: economy.sorted_bundle(b) for a, b in self.bundles.items()}


def endowment_allocation(economy: Economy) -> Allocation:
    return Allocation({a: economy.endowments[a] for a in economy.agents})


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class CheckResult:
    """Outcome of a universal property check with its first counterexample."""

    holds: bool
    witness: dict[str, Any] | None = None

    def __bool__(self) -> bool:
        return self.holds


# ---------------------------------------------------------------------------
# validation


def validate_economy(e: Economy) -> ValidationReport:
    report = ValidationReport()
    objects = set(e.objects)
    if len(objects) != len(e.objects):
        report.violations.append("duplicate object ids")
    if len(set(e.agents)) != len(e.agents):
        report.violations.append("duplicate agent ids")

    owner: dict[str, str] = {}
    for agent in e.agents:
        endowment = e.endowments.get(agent)
        if endowment is None:
            report.violations.append(f"agent {agent}: missing endowment")
            continue
        if not endowment:
            report.violations.append(f"agent {agent}: empty endowment")
        for obj in sorted(endowment):
            if obj not in objects:
                report.violations.append(f"agent {agent}: endowment has unknown object {obj}")
            elif obj in owner:
                report.violations.append(
                    f"overlapping endowments: object {obj} owned by {owner[obj]} and {agent}"
                )
            else:
                owner[obj] = agent
    for extra in sorted(set(e.endowments) - set(e.agents)):
        report.violations.append(f"endowment for unknown agent {extra}")
    for obj in e.objects:
        if obj not in owner:
            report.violations.append(f"object {obj} is in no endowment")

    if e.categories is not None:
        listed = [o for objs in e.categories.values() for o in objs]
        if sorted(listed) != sorted(objects) or len(listed) != len(set(listed)):
            report.violations.append("categories do not partition the objects")

    for agent in e.agents:
        util = e.utilities.get(agent)
        if util is None:
            report.violations.append(f"agent {agent}: missing utility")
            continue
        report.violations.extend(f"agent {agent}: {msg}" for msg in _utility_problems(e, util))
    return report


def _utility_problems(e: Economy, util: UtilityFunction) -> list[str]:
    objects = set(e.objects)
    problems = []
    unknown = util.referenced_objects() - objects
    if unknown:
        problems.append(f"utility references unknown objects {sorted(unknown)}")
    if isinstance(util, TableUtility):
        if len(e.objects) > 20:
            problems.append("table utility over more than 20 objects")
        else:
            missing = sum(1 for m in range(1 << len(e.objects)) if e.bundle_of(m) not in util.values)
            if missing:
                problems.append(f"utility table not total: {missing} bundles missing")
    elif isinstance(util, AdditiveUtility):
        for obj in e.objects:
            w = util.weights.get(obj)
            if w is None:
                problems.append(f"additive weight missing for {obj}")
            elif w <= 0:
                problems.append(f"additive weight for {obj} is not positive")
    elif isinstance(util, HousingUtility):
        if sorted(util.ranking) != sorted(objects) or len(set(util.ranking)) != len(util.ranking):
            problems.append("housing ranking is not a strict order over all houses")
    elif isinstance(util, CategoricalUtility):
        if set(util.category_of) != objects:
            problems.append("categorical utility does not cover every object")
    return problems


# ---------------------------------------------------------------------------
# allocations


def is_s_allocation(e: Economy, s: Iterable[str], xs: Mapping[str, Iterable[str]]) -> bool:
    s = list(s)
    if not s or set(xs) != set(s):
        return False
    pool = e.coalition_mask(s)
    used = 0
    for agent in s:
        mask = e.mask_of(xs[agent])
        if mask & used or mask & ~pool:
            return False
        used |= mask
    return True


def is_allocation(e: Economy, xs: Mapping[str, Iterable[str]]) -> bool:
    used = 0
    for bundle in xs.values():
        mask = e.mask_of(bundle)
        if mask & used:
            return False
        used |= mask
    return True


def is_individually_rational(e: Economy, x: Allocation) -> bool:
    return all(e.value(a, x[a]) >= e.endowment_value(a) for a in e.agents)


# ---------------------------------------------------------------------------
# structural properties


def check_injective(e: Economy, i: str) -> bool:
    """Distinct bundles get distinct values; ``-inf`` may repeat."""
    seen: set[ExtValue] = set()
    for v in e.table(i):
        if v is NEG_INF:
            continue
        if v in seen:
            return False
        seen.add(v)
    return True


def check_strictly_monotone(e: Economy, i: str, strict: bool = False) -> bool:
    """Strict monotonicity of ``v_i`` under set inclusion.

    By default only pairs of bundles with finite values are compared, which
    lets unit-demand and categorical utilities pass on their consumption
    domain. ``strict=True`` applies the raw definition to every pair.
    """
    table = e.table(i)
    full = (1 << len(e.objects)) - 1
    for big in range(1, full + 1):
        vb = table[big]
        if not strict and vb is NEG_INF:
            continue
        sub = (big - 1) & big
        while True:
            vs = table[sub]
            if strict or vs is not NEG_INF:
                if not vs < vb:
                    return False
            if sub == 0:
                break
            sub = (sub - 1) & big
    return True


@dataclass(frozen=True)
class ParetoFrontierPair:
    """Best value for ``agent`` given a floor ``theta`` on ``partner``'s value.

    ``points`` holds ``(theta, value)`` breakpoints in increasing ``theta``;
    between breakpoints the function steps up to the next one.
    """

    agent: str
    partner: str
    points: tuple[tuple[ExtValue, ExtValue], ...]

    def __call__(self, theta: ExtValue) -> ExtValue:
        for t, v in self.points:
            if theta <= t:
                return v
        return NEG_INF

    @property
    def thetas(self) -> list[ExtValue]:
        return [t for t, _ in self.points]


def pareto_frontier_pair(e: Economy, i: str, j: str) -> ParetoFrontierPair:
    if i == j:
        raise ValueError("pareto_frontier_pair needs two distinct agents")
    pool = e.coalition_mask([i, j])
    vj = e.table(j)
    best_i = e.best_subset_table(i)
    best_at: dict[ExtValue, ExtValue] = {}
    sub = pool
    while True:
        theta = vj[sub]
        cand = best_i[pool & ~sub]
        if theta not in best_at or cand > best_at[theta]:
            best_at[theta] = cand
        if sub == 0:
            break
        sub = (sub - 1) & pool
    points: list[tuple[ExtValue, ExtValue]] = []
    running: ExtValue = NEG_INF
    for theta in sorted(best_at, reverse=True):
        running = max(running, best_at[theta])
        points.append((theta, running))
    points.reverse()
    return ParetoFrontierPair(i, j, tuple(points))


def check_discrete_TU(e: Economy) -> CheckResult:
    """Pairwise frontiers never drop faster than slope -1.

    ``theta`` ranges over the values ``j`` can reach inside the pair's joint
    endowment; between those the frontier is flat.
    """
    for i in e.agents:
        for j in e.agents:
            if i == j:
                continue
            frontier = pareto_frontier_pair(e, i, j)
            finite = [(t, v) for t, v in frontier.points if is_finite(t)]
            for a, (theta, v_lo) in enumerate(finite):
                for theta2, v_hi in finite[a + 1 :]:
                    if v_lo is NEG_INF:
                        continue
                    if v_hi is NEG_INF or v_lo - v_hi > theta2 - theta:
                        return CheckResult(
                            False, {"i": i, "j": j, "theta": theta, "theta_prime": theta2}
                        )
    return CheckResult(True)


GFT_MAX_AGENTS = 4
GFT_MAX_OBJECTS = 6


def coalitions(agents: Sequence[str], max_size: int | None = None) -> list[tuple[str, ...]]:
    """Nonempty coalitions ordered by size, then lexicographically by agent order."""
    top = len(agents) if max_size is None else min(max_size, len(agents))
    out: list[tuple[str, ...]] = []
    for size in range(1, top + 1):
        out.extend(combinations(agents, size))
    return out


def check_gains_from_trade(e: Economy, guard: bool = True) -> CheckResult:
    """Any two coalition outcomes can be merged without hurting anyone.

    Members of both coalitions are guaranteed the worse of their two values,
    members of exactly one keep the value from their own coalition. Only
    Pareto-maximal outcomes need checking since the requirement is monotone.
    """
    from .enumeration import coalition_frontier, dominated_by_any

    if guard and (len(e.agents) > GFT_MAX_AGENTS or len(e.objects) > GFT_MAX_OBJECTS):
        raise SizeLimitError(
            f"gains-from-trade check limited to {GFT_MAX_AGENTS} agents and "
            f"{GFT_MAX_OBJECTS} objects",
            estimate=(len(e.agents) + 1) ** len(e.objects),
        )
    cs = coalitions(e.agents)
    for a, s in enumerate(cs):
        for s2 in cs[a + 1 :]:
            ss, ss2 = set(s), set(s2)
            if ss <= ss2 or ss2 <= ss:
                continue
            union = tuple(x for x in e.agents if x in ss | ss2)
            f1, f2, fu = coalition_frontier(e, s), coalition_frontier(e, s2), coalition_frontier(e, union)
            pos1 = [union.index(x) for x in s]
            pos2 = [union.index(x) for x in s2]
            for r1 in range(len(f1.ranks)):
                for r2 in range(len(f2.ranks)):
                    need = [None] * len(union)
                    for p, rank in zip(pos1, f1.ranks[r1]):
                        need[p] = int(rank)
                    for p, rank in zip(pos2, f2.ranks[r2]):
                        need[p] = int(rank) if need[p] is None else min(need[p], int(rank))
                    if not dominated_by_any(fu.ranks, need):
                        return CheckResult(
                            False,
                            {
                                "S": s,
                                "S_prime": s2,
                                "X": f1.witness(r1),
                                "X_prime": f2.witness(r2),
                            },
                        )
    return CheckResult(True)


def gains_from_trade_merge(
    e: Economy,
    x: Mapping[str, Iterable[str]],
    x_prime: Mapping[str, Iterable[str]],
) -> dict[str, frozenset[str]] | None:
    """A merged allocation for one concrete pair of coalition outcomes, if any."""
    from .enumeration import coalition_frontier, dominated_by_any

    s, s2 = set(x), set(x_prime)
    union = tuple(a for a in e.agents if a in s | s2)
    need = []
    for a in union:
        vals = []
        if a in s:
            vals.append(e.value(a, x[a]))
        if a in s2:
            vals.append(e.value(a, x_prime[a]))
        need.append(min(vals))
    front = coalition_frontier(e, union)
    idx = front.first_dominating(front.encode(need))
    return None if idx is None else front.witness(idx)
