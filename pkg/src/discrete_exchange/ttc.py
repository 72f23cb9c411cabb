"""Gale's top trading cycles for Shapley-Scarf housing markets."""

from __future__ import annotations

from dataclasses import dataclass

from .model import Allocation, Economy, HousingUtility


class MalformedMarket(ValueError):
    pass


@dataclass(frozen=True)
class TTCResult:
    assignment: dict[str, str]
    rounds: list[list[str]]
    cycles: list[list[list[str]]]

    def to_json(self) -> dict:
        return {"assignment": dict(self.assignment), "rounds": self.rounds, "cycles": self.cycles}


def housing_check(e: Economy) -> dict[str, str]:
    """Validate a housing market and return each agent's own house."""
    if len(e.objects) != len(e.agents):
        raise MalformedMarket("a housing market has exactly one house per agent")
    house_of = {}
    for agent in e.agents:
        endowment = e.endowments[agent]
        if len(endowment) != 1:
            raise MalformedMarket(f"agent {agent} must own exactly one house")
        util = e.utilities[agent]
        if not isinstance(util, HousingUtility):
            raise MalformedMarket(f"agent {agent} does not have a housing utility")
        if len(set(util.ranking)) != len(util.ranking) or set(util.ranking) != set(e.objects):
            raise MalformedMarket(f"agent {agent}: ranking must be a strict order over all houses")
        (house_of[agent],) = endowment
    if len(set(house_of.values())) != len(house_of):
        raise MalformedMarket("duplicate houses in endowments")
    return house_of


def run_ttc(e: Economy) -> TTCResult:
    """Top trading cycles, clearing every cycle of a round at once."""
    house_of = housing_check(e)
    owner = {h: a for a, h in house_of.items()}
    remaining = list(e.agents)
    assignment: dict[str, str] = {}
    rounds: list[list[str]] = []
    cycles: list[list[list[str]]] = []
    while remaining:
        left = set(remaining)
        points_to = {}
        for agent in remaining:
            top = next(h for h in e.utilities[agent].ranking if owner[h] in left)
            points_to[agent] = owner[top]
        # every node has out-degree one, so each walk ends in a cycle
        round_cycles = []
        on_cycle: set[str] = set()
        for start in remaining:
            if start in on_cycle:
                continue
            path, seen = [], {}
            node = start
            while node not in seen and node not in on_cycle:
                seen[node] = len(path)
                path.append(node)
                node = points_to[node]
            if node in seen:
                cycle = path[seen[node] :]
                pivot = min(range(len(cycle)), key=lambda n: e.agent_index[cycle[n]])
                cycle = cycle[pivot:] + cycle[:pivot]
                round_cycles.append(cycle)
                on_cycle.update(cycle)
        round_cycles.sort(key=lambda c: e.agent_index[c[0]])
        for cycle in round_cycles:
            for agent in cycle:
                assignment[agent] = house_of[points_to[agent]]
        cleared = [a for a in remaining if a in on_cycle]
        rounds.append(cleared)
        cycles.append(round_cycles)
        remaining = [a for a in remaining if a not in on_cycle]
    return TTCResult(assignment, rounds, cycles)


def ttc_allocation(e: Economy, result: TTCResult | None = None) -> Allocation:
    result = run_ttc(e) if result is None else result
    return Allocation({a: frozenset([result.assignment[a]]) for a in e.agents})
