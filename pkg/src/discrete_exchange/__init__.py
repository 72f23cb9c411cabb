"""Stability in exchange economies with indivisible objects.

Exact-rational models of economies, brute-force core and bargaining-set
oracles, top trading cycles, the T-operator iteration, and the rounding
procedures behind the balancedness results.
"""

from .model import (
    Allocation,
    Economy,
    check_discrete_TU,
    check_gains_from_trade,
    check_injective,
    check_strictly_monotone,
    validate_economy,
)
from .oracle import (
    NTUGame,
    StructuredAllocation,
    build_ntu_game,
    check_balanced,
    check_ordinal_convexity,
    find_block,
    ntu_weak_core,
    pairwise_bargaining_set,
    pairwise_stable_set,
    strong_core,
    weak_core,
)
from .toperator import TContext, apply_T, iterate_to_fixed_point
from .ttc import run_ttc
from .values import NEG_INF

__all__ = [
    "Allocation",
    "Economy",
    "NEG_INF",
    "NTUGame",
    "StructuredAllocation",
    "TContext",
    "apply_T",
    "build_ntu_game",
    "check_balanced",
    "check_discrete_TU",
    "check_gains_from_trade",
    "check_injective",
    "check_ordinal_convexity",
    "check_strictly_monotone",
    "find_block",
    "iterate_to_fixed_point",
    "ntu_weak_core",
    "pairwise_bargaining_set",
    "pairwise_stable_set",
    "run_ttc",
    "strong_core",
    "validate_economy",
    "weak_core",
]
