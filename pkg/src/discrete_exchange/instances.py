"""Bundled example economies and seeded random instance families."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Iterable, Sequence

from .model import (
    AdditiveUtility,
    Allocation,
    CategoricalUtility,
    DichotomousUtility,
    Economy,
    HousingUtility,
    TableUtility,
)
from .oracle import NTUGame
from .values import NEG_INF, ExtValue

SHOE_OBJECTS = ("l1", "r1", "l2", "r2", "l3", "r3")
COMPLETION_RULE = (
    "listed bundles take values n, n-1, ..., 1 in listed order (endowment last); "
    "every other bundle takes a distinct value 0, -1, -2, ... in bitmask order"
)


def _all_bundles(objects: Sequence[str]) -> list[frozenset[str]]:
    return [frozenset(o for n, o in enumerate(objects) if m >> n & 1) for m in range(1 << len(objects))]


def ordinal_table(
    objects: Sequence[str], listed: Iterable[Iterable[str]], endowment: Iterable[str]
) -> TableUtility:
    """Injective utility that ranks ``listed`` on top and everything else below."""
    order: list[frozenset[str]] = []
    for bundle in list(listed) + [endowment]:
        b = frozenset(bundle)
        if b not in order:
            order.append(b)
    values: dict[frozenset[str], ExtValue] = {
        b: Fraction(len(order) - n) for n, b in enumerate(order)
    }
    low = 0
    for b in _all_bundles(objects):
        if b not in values:
            values[b] = Fraction(low)
            low -= 1
    return TableUtility(values)


def _shoe_economy(name: str, prefs: dict[str, list[tuple[str, str]]]) -> Economy:
    endow = {a: frozenset({f"l{a}", f"r{a}"}) for a in prefs}
    utils = {a: ordinal_table(SHOE_OBJECTS, prefs[a], endow[a]) for a in prefs}
    return Economy.create(SHOE_OBJECTS, list(prefs), endow, utils, name=name)


def _alloc(**bundles: tuple[str, ...]) -> Allocation:
    return Allocation({a.lstrip("_"): frozenset(b) for a, b in bundles.items()})


def example1() -> Economy:
    return _shoe_economy(
        "ex1",
        {
            "1": [("l2", "r3"), ("l3", "r1"), ("l1", "r1")],
            "2": [("l3", "r1"), ("l2", "r3"), ("l2", "r2")],
            "3": [("l1", "r2"), ("l3", "r3"), ("l3", "r3")],
        },
    )


def example1_allocations() -> dict[str, Allocation]:
    return {
        "X": _alloc(_1=("l2", "r3"), _2=("l3", "r1"), _3=("l1", "r2")),
        "Y": _alloc(_1=("l3", "r1"), _2=("l2", "r3"), _3=("l1", "r2")),
    }


def example2() -> Economy:
    return _shoe_economy(
        "ex2",
        {
            "1": [("l1", "r2"), ("l3", "r1"), ("l1", "r1")],
            "2": [("l2", "r3"), ("l2", "r1"), ("l2", "r2")],
            "3": [("l1", "r3"), ("l3", "r2"), ("l3", "r3")],
        },
    )


def example2_allocations() -> dict[str, Allocation]:
    return {
        "X": _alloc(_1=("l1", "r2"), _2=("l2", "r1"), _3=("l3", "r3")),
        "Y": _alloc(_1=("l1", "r1"), _2=("l2", "r3"), _3=("l3", "r2")),
        "Z": _alloc(_1=("l3", "r1"), _2=("l2", "r2"), _3=("l1", "r3")),
    }


# cardinal (left, right) values per agent for the shoe pair (l_k, r_k)
KONISHI_VALUES = {
    "1": [(1, 3), (0, 2), (0, 0), (3, 0)],
    "2": [(3, 5), (5, 1), (0, 2), (0, 0)],
    "3": [(0, 0), (0, 3), (5, 1), (2, 5)],
    "4": [(0, 0), (2, 0), (5, 3), (1, 5)],
}
KONISHI_OBJECTS = ("l1", "r1", "l2", "r2", "l3", "r3", "l4", "r4")


def konishi_value(agent: str, bundle: Iterable[str]) -> ExtValue:
    bundle = list(bundle)
    if sum(o[0] == "l" for o in bundle) > 1 or sum(o[0] == "r" for o in bundle) > 1:
        return NEG_INF
    total = 0
    for o in bundle:
        left, right = KONISHI_VALUES[agent][int(o[1:]) - 1]
        total += left if o[0] == "l" else right
    return Fraction(total)


def konishi() -> Economy:
    agents = list(KONISHI_VALUES)
    utils = {
        a: TableUtility({b: konishi_value(a, b) for b in _all_bundles(KONISHI_OBJECTS)}) for a in agents
    }
    endow = {a: frozenset({f"l{a}", f"r{a}"}) for a in agents}
    categories = {"left": [o for o in KONISHI_OBJECTS if o[0] == "l"],
                  "right": [o for o in KONISHI_OBJECTS if o[0] == "r"]}
    return Economy.create(KONISHI_OBJECTS, agents, endow, utils, categories, name="konishi")


def roommate() -> NTUGame:
    """Three roommates; a top partner is worth 2, the second choice 1, living alone 0."""
    zero = Fraction(0)
    v = {k: Fraction(k) for k in (1, 2)}
    gens = {
        ("1",): ((zero,),),
        ("2",): ((zero,),),
        ("3",): ((zero,),),
        ("1", "2"): ((v[2], v[1]),),
        ("2", "3"): ((v[2], v[1]),),
        ("1", "3"): ((v[1], v[2]),),
        ("1", "2", "3"): (
            (v[2], v[1], zero),
            (zero, v[2], v[1]),
            (v[1], zero, v[2]),
            (zero, zero, zero),
        ),
    }
    return NTUGame(("1", "2", "3"), gens)


def shoes_gft() -> Economy:
    """The second shoe economy, used to exhibit a gains-from-trade failure."""
    e = example2()
    return Economy.create(e.objects, e.agents, e.endowments, e.utilities, name="shoes-gft")


SHOES_GFT_WITNESS = {
    "S": ("1", "2"),
    "X": {"1": frozenset({"l1", "r2"}), "2": frozenset({"l2", "r1"})},
    "S_prime": ("2", "3"),
    "X_prime": {"2": frozenset({"l2", "r3"}), "3": frozenset({"l3", "r2"})},
}


EXAMPLES = ("ex1", "ex2", "roommate", "konishi", "shoes-gft")


def load_example(name: str):
    builders = {"ex1": example1, "ex2": example2, "roommate": roommate, "konishi": konishi, "shoes-gft": shoes_gft}
    try:
        return builders[name]()
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}") from None


# ---------------------------------------------------------------------------
# random families

FAMILIES = ("dichotomous", "categorical", "housing", "additive-common", "additive-free")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    agents: int
    objects: int = 0
    categories: int = 0
    per_category: int = 0  # upper bound on objects per category
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.agents < 1:
            raise ValueError("need at least one agent")


def _agent_ids(n: int) -> list[str]:
    return [str(k) for k in range(1, n + 1)]


def _endow(rng: random.Random, agents: Sequence[str], objects: Sequence[str]) -> dict[str, list[str]]:
    if len(objects) < len(agents):
        raise ValueError("every agent needs an object; use at least as many objects as agents")
    shuffled = list(objects)
    rng.shuffle(shuffled)
    out = {a: [shuffled[n]] for n, a in enumerate(agents)}
    for o in shuffled[len(agents) :]:
        out[rng.choice(agents)].append(o)
    order = {o: n for n, o in enumerate(objects)}
    return {a: sorted(b, key=order.__getitem__) for a, b in out.items()}


def random_dichotomous(n_agents: int, n_objects: int, rng: random.Random) -> Economy:
    agents = _agent_ids(n_agents)
    objects = [f"o{k}" for k in range(1, n_objects + 1)]
    endow = _endow(rng, agents, objects)
    utils = {a: DichotomousUtility(frozenset(o for o in objects if rng.random() < 0.5)) for a in agents}
    return Economy.create(objects, agents, endow, utils, name="dichotomous")


def random_categorical(n_agents: int, n_categories: int, per_category: int, rng: random.Random) -> Economy:
    agents = _agent_ids(n_agents)
    if n_categories * per_category < n_agents:
        raise ValueError("too few objects for every agent to own one")
    while True:
        sizes = [rng.randint(1, per_category) for _ in range(n_categories)]
        if sum(sizes) >= n_agents:
            break
    categories = {f"c{k}": [f"c{k}o{m}" for m in range(1, s + 1)] for k, s in enumerate(sizes, start=1)}
    objects = [o for objs in categories.values() for o in objs]
    category_of = {o: k for k, objs in categories.items() for o in objs}
    endow = _endow(rng, agents, objects)
    utils = {
        a: CategoricalUtility(frozenset(o for o in objects if rng.random() < 0.5), category_of) for a in agents
    }
    return Economy.create(objects, agents, endow, utils, categories, name="categorical")


def random_housing(n_agents: int, rng: random.Random) -> Economy:
    agents = _agent_ids(n_agents)
    houses = [f"h{a}" for a in agents]
    utils = {}
    for a in agents:
        ranking = list(houses)
        rng.shuffle(ranking)
        utils[a] = HousingUtility(tuple(ranking))
    return Economy.create(houses, agents, {a: [f"h{a}"] for a in agents}, utils, name="housing")


def random_additive(n_agents: int, n_objects: int, rng: random.Random, common: bool) -> Economy:
    """Distinct power-of-two weights, shared by every agent when ``common``."""
    agents = _agent_ids(n_agents)
    objects = [f"o{k}" for k in range(1, n_objects + 1)]
    endow = _endow(rng, agents, objects)
    powers = [Fraction(2**k) for k in range(n_objects)]

    def draw() -> dict[str, Fraction]:
        w = list(powers)
        rng.shuffle(w)
        return dict(zip(objects, w))

    shared = draw()
    utils = {a: AdditiveUtility(shared if common else draw()) for a in agents}
    return Economy.create(objects, agents, endow, utils, name="additive-common" if common else "additive-free")


def random_injective_table(n_agents: int, n_objects: int, rng: random.Random) -> Economy:
    """Uniformly random strict ranking of all bundles for each agent."""
    agents = _agent_ids(n_agents)
    objects = [f"o{k}" for k in range(1, n_objects + 1)]
    endow = _endow(rng, agents, objects)
    bundles = _all_bundles(objects)
    utils = {}
    for a in agents:
        ranks = list(range(len(bundles)))
        rng.shuffle(ranks)
        utils[a] = TableUtility({b: Fraction(r) for b, r in zip(bundles, ranks)})
    return Economy.create(objects, agents, endow, utils, name="table")


def generate(spec: InstanceSpec) -> Economy:
    rng = random.Random(spec.seed)
    if spec.family == "dichotomous":
        return random_dichotomous(spec.agents, spec.objects, rng)
    if spec.family == "categorical":
        return random_categorical(spec.agents, spec.categories, spec.per_category, rng)
    if spec.family == "housing":
        return random_housing(spec.agents, rng)
    return random_additive(spec.agents, spec.objects, rng, common=spec.family == "additive-common")


def all_housing_markets(n: int) -> Iterable[Economy]:
    """Every strict housing market on ``n`` agents (small ``n`` only)."""
    agents = _agent_ids(n)
    houses = [f"h{a}" for a in agents]
    rankings = list(permutations(houses))
    for combo in product(rankings, repeat=n):
        utils = {a: HousingUtility(r) for a, r in zip(agents, combo)}
        yield Economy.create(houses, agents, {a: [f"h{a}"] for a in agents}, utils, name="housing")
