"""Command-line interface: ``discrete-exchange <command> ...``.

Exit codes: 0 success or claim holds, 1 claim fails or a precondition is
violated, 2 unreadable input, 3 the computation exceeds its size guard.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

from . import instances, io
from .enumeration import BUDGET_ENV
from .model import (
    Allocation,
    Economy,
    SizeLimitError,
    check_discrete_TU,
    check_gains_from_trade,
    check_injective,
    check_strictly_monotone,
    gains_from_trade_merge,
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
from .rounding import RoundingError, RowSplitMap, WitnessError, round_categorical, round_dichotomous
from .toperator import (
    InvariantViolation,
    PreconditionError,
    TContext,
    check_T_fixed_point,
    classify_and_pair,
    construct_bargaining_allocation,
    iterate_to_fixed_point,
)
from .ttc import MalformedMarket, run_ttc, ttc_allocation
from .values import format_value

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SIZE = 0, 1, 2, 3
SOLVERS = ("weak-core", "strong-core", "pairwise-stable", "ttc", "talgo", "bargaining")
CHECKS = ("injective", "monotone", "dtu", "gft", "balanced", "convex")


class Outcome(Exception):
    """Carries a finished report and its exit code out of a command."""

    def __init__(self, code: int, result: dict):
        super().__init__(code)
        self.code = code
        self.result = result


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_jsonable(v) for v in obj)
    if isinstance(obj, (str, int, bool, float)) or obj is None:
        return obj
    if isinstance(obj, Allocation):
        return _jsonable(obj.bundles)
    if isinstance(obj, StructuredAllocation):
        return {"allocation": _jsonable(obj.allocation), "structure": _jsonable(obj.structure)}
    try:
        return format_value(obj)
    except (TypeError, ValueError):
        return str(obj)


def _digest(data: Any) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]


def _load_economy(path: str) -> Economy:
    doc = io.load(path)
    if not isinstance(doc, Economy):
        raise io.FormatError(f"{path} does not hold an economy")
    return doc


def _allocations(e: Economy, xs: Sequence[Allocation]) -> list[dict]:
    return [x.to_json(e) for x in xs]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> dict:
    doc = io.load(args.path)
    if isinstance(doc, Economy):
        report = validate_economy(doc)
        result = {"ok": report.ok, "violations": report.violations, "digest": _digest(io.economy_to_json(doc))}
        if not report.ok:
            raise Outcome(EXIT_FAIL, result)
        return result
    return {"ok": True, "kind": "ntu" if isinstance(doc, NTUGame) else "matrix"}


def _require_valid(e: Economy) -> None:
    report = validate_economy(e)
    if not report.ok:
        raise Outcome(EXIT_FAIL, {"ok": False, "violations": report.violations})


def cmd_solve(args) -> dict:
    e = _load_economy(args.path)
    _require_valid(e)
    result: dict[str, Any] = {"solver": args.solver, "digest": _digest(io.economy_to_json(e))}
    if args.solver in ("weak-core", "strong-core", "pairwise-stable"):
        fn = {"weak-core": weak_core, "strong-core": strong_core, "pairwise-stable": pairwise_stable_set}[args.solver]
        found = fn(e)
        result.update(count=len(found), allocations=_allocations(e, found))
        return result
    if args.solver == "ttc":
        ttc = run_ttc(e)
        result.update(ttc.to_json())
        return result
    k = args.k if args.k is not None else (2 if args.solver == "bargaining" else len(e.agents))
    if args.solver == "talgo":
        ctx = TContext(e, k)
        trace = iterate_to_fixed_point(ctx)
        fixed = check_T_fixed_point(ctx, trace.fixed_point)
        result.update(
            k=k,
            iterations=trace.iterations,
            iterates=trace.to_json(e.agents),
            fixed_point=dict(zip(e.agents, map(format_value, trace.fixed_point))),
            fixed_point_of_T=fixed is not None,
            allocation=None if fixed is None else fixed.to_json(e),
        )
        return result
    # bargaining
    if args.structure:
        data = io.read_json(args.structure)
        xs = StructuredAllocation(
            Allocation({a: frozenset(b) for a, b in data["allocation"].items()}),
            tuple(tuple(c) for c in data["structure"]),
        )
        try:
            xs.validate(e)
        except ValueError as exc:
            raise Outcome(EXIT_FAIL, {**result, "error": str(exc)}) from None
    else:
        if k != 2:
            raise PreconditionError("the bargaining construction uses k = 2")
        ctx = TContext(e, 2)
        trace = iterate_to_fixed_point(ctx)
        pairing = classify_and_pair(ctx, trace.fixed_point)
        xs = construct_bargaining_allocation(ctx, pairing)
        result.update(iterations=trace.iterations, pairing=pairing.to_json())
    cert = pairwise_bargaining_set(e, xs)
    result.update(xs.to_json(e))
    result["in_pairwise_bargaining_set"] = cert.member
    result["objections_checked"] = cert.objections_checked
    if not cert.member:
        pair, objection = cert.unanswered
        result["unanswered_objection"] = {"pair": list(pair), "allocation": _jsonable(objection)}
        raise Outcome(EXIT_FAIL, result)
    return result


def cmd_check(args) -> dict:
    doc = io.load(args.path)
    result: dict[str, Any] = {"check": args.check}
    if args.check in ("balanced", "convex"):
        game = doc if isinstance(doc, NTUGame) else build_ntu_game(doc) if isinstance(doc, Economy) else None
        if game is None:
            raise io.FormatError("balanced/convex checks need an economy or an NTU game")
        outcome = (check_balanced if args.check == "balanced" else check_ordinal_convexity)(game)
        holds, witness = outcome.holds, outcome.witness
    else:
        if not isinstance(doc, Economy):
            raise io.FormatError(f"check {args.check} needs an economy")
        _require_valid(doc)
        if args.check in ("injective", "monotone"):
            test: Callable = check_injective if args.check == "injective" else check_strictly_monotone
            failing = [a for a in doc.agents if not test(doc, a)]
            holds, witness = not failing, ({"agents": failing} if failing else None)
        else:
            outcome = check_discrete_TU(doc) if args.check == "dtu" else check_gains_from_trade(doc)
            holds, witness = outcome.holds, outcome.witness
    result["holds"] = holds
    if witness is not None:
        result["witness"] = _jsonable(witness)
    if not holds:
        raise Outcome(EXIT_FAIL, result)
    return result


def cmd_gen(args) -> dict:
    spec = instances.InstanceSpec(
        args.family, args.agents, args.objects or 0, args.categories or 0, args.per_category or 0, args.seed
    )
    e = instances.generate(spec)
    data = io.economy_to_json(e)
    text = io.dumps(data)
    if args.out:
        Path(args.out).write_text(text)
    result = {"family": spec.family, "seed": spec.seed, "digest": _digest(data), "out": args.out}
    if not args.out:
        result["economy"] = data
    return result


def _example_claims(name: str, doc) -> dict:
    if name == "ex1":
        e, xs = doc, instances.example1_allocations()
        strong, weak = strong_core(e), weak_core(e)
        return {
            "strong_core": _allocations(e, strong),
            "X_in_weak_core": xs["X"] in weak,
            "Y_in_weak_core": xs["Y"] in weak,
            "holds": strong == [xs["X"]] and xs["X"] in weak and xs["Y"] in weak,
        }
    if name in ("ex2",):
        e, xs = doc, instances.example2_allocations()
        blocks = {k: find_block(e, x, strong=True) for k, x in xs.items()}
        expected = {"X": ("2", "3"), "Y": ("1", "3"), "Z": ("1", "2")}
        core = weak_core(e)
        return {
            "weak_core_size": len(core),
            "blocks": {k: list(b.coalition) if b else None for k, b in blocks.items()},
            "holds": not core and all(blocks[k] and blocks[k].coalition == c for k, c in expected.items()),
        }
    if name == "konishi":
        e = doc
        core = weak_core(e)
        better = instances.konishi_value("1", ["l4", "r1"])
        worse = instances.konishi_value("1", ["l4", "r2"])
        return {
            "weak_core_size": len(core),
            "agent1_l4r1": format_value(better),
            "agent1_l4r2": format_value(worse),
            "holds": not core and better > worse,
        }
    if name == "roommate":
        g = doc
        core = ntu_weak_core(g)
        bal = check_balanced(g)
        return {"ntu_core_size": len(core), "balanced": bal.holds, "holds": not core and not bal.holds}
    if name == "shoes-gft":
        e, w = doc, instances.SHOES_GFT_WITNESS
        gft = check_gains_from_trade(e)
        merged = gains_from_trade_merge(e, w["X"], w["X_prime"])
        return {
            "gains_from_trade": gft.holds,
            "first_witness": _jsonable(gft.witness),
            "stated_pair_mergeable": merged is not None,
            "holds": not gft.holds and merged is None,
        }
    raise ValueError(name)


def cmd_examples(args) -> dict:
    doc = instances.load_example(args.name)
    data = io.ntu_to_json(doc) if isinstance(doc, NTUGame) else io.economy_to_json(doc)
    if args.out:
        out = Path(args.out)
        if out.is_dir():
            out = out / f"{args.name}.json"
        out.write_text(io.dumps(data))
    result = {"example": args.name, "digest": _digest(data), "out": None if not args.out else str(out)}
    if isinstance(doc, Economy) and args.name in ("ex1", "ex2"):
        result["completion_rule"] = instances.COMPLETION_RULE
    claims = _example_claims(args.name, doc)
    result.update(claims)
    if not claims["holds"]:
        raise Outcome(EXIT_FAIL, result)
    return result


def cmd_round(args) -> dict:
    doc = io.load(args.path)
    if not isinstance(doc, tuple):
        raise io.FormatError(f"{args.path} does not hold a matrix")
    m, categories, agent_of = doc
    if categories:
        splits = RowSplitMap(dict(agent_of)) if agent_of else None
        run = round_categorical(m, categories, splits)
        return {
            "mode": "categorical",
            "passes": run.passes,
            "fractional_counts": run.fractional_counts,
            "allocation": _jsonable(run.allocation.bundles),
        }
    counts = [m.fractional_count()]
    out = round_dichotomous(m, lambda _s, mm: counts.append(mm.fractional_count()))
    return {"mode": "dichotomous", "passes": len(counts) - 1, "fractional_counts": counts, "matrix": out.to_json()}


# ---------------------------------------------------------------------------
# plumbing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="discrete-exchange", description="Exchange economies with indivisible objects.")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")
    p.add_argument("--budget", type=int, help=f"enumeration budget (default from ${BUDGET_ENV} or 2000000)")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="validate an economy, NTU game or matrix file")
    s.add_argument("path")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", help="run a solver on an economy")
    s.add_argument("solver", choices=SOLVERS)
    s.add_argument("path")
    s.add_argument("--k", type=int, help="largest coalition used by the T operator")
    s.add_argument("--structure", help="JSON file with an allocation and its coalition structure")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("check", help="check a structural property")
    s.add_argument("check", choices=CHECKS)
    s.add_argument("path")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("gen", help="generate a seeded random economy")
    s.add_argument("--family", required=True, choices=instances.FAMILIES)
    s.add_argument("--agents", type=int, required=True)
    s.add_argument("--objects", type=int)
    s.add_argument("--categories", type=int)
    s.add_argument("--per-category", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("examples", help="write a bundled example and verify its headline claim")
    s.add_argument("name", choices=instances.EXAMPLES)
    s.add_argument("--out")
    s.set_defaults(func=cmd_examples)

    s = sub.add_parser("round", help="round a fractional matrix file")
    s.add_argument("path")
    s.set_defaults(func=cmd_round)
    return p


def _render(report: dict, as_json: bool) -> str:
    if as_json:
        return json.dumps(report, indent=2) + "\n"
    lines = []
    for key, value in report.items():
        if key == "result" and isinstance(value, dict):
            lines.append("result:")
            lines.extend(f"  {k}: {json.dumps(v) if isinstance(v, (dict, list)) else v}" for k, v in value.items())
            continue
        if isinstance(value, (dict, list)):
            value = json.dumps(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    saved = os.environ.get(BUDGET_ENV)
    if args.budget is not None:
        os.environ[BUDGET_ENV] = str(args.budget)
    report: dict[str, Any] = {"command": argv, "seed": getattr(args, "seed", None)}
    start = time.perf_counter()
    try:
        report["result"] = args.func(args)
        code = EXIT_OK
    except Outcome as out:
        report["result"], code = out.result, out.code
    except (io.FormatError, FileNotFoundError, IsADirectoryError) as exc:
        report["error"], code = f"parse error: {exc}", EXIT_PARSE
    except SizeLimitError as exc:
        report["error"], code = f"size refusal: {exc}", EXIT_SIZE
        report["estimate"] = exc.estimate
    except (PreconditionError, MalformedMarket, InvariantViolation, RoundingError, WitnessError, TypeError) as exc:
        report["error"], code = f"{type(exc).__name__}: {exc}", EXIT_FAIL
        payload = getattr(exc, "payload", None)
        if payload is not None:
            report["payload"] = _jsonable(payload)
    finally:
        if saved is None:
            os.environ.pop(BUDGET_ENV, None)
        else:
            os.environ[BUDGET_ENV] = saved
    if args.timing:
        report["seconds"] = round(time.perf_counter() - start, 3)
    report["exit_code"] = code
    sys.stdout.write(_render(_jsonable(report), args.json))
    return code


if __name__ == "__main__":
    sys.exit(main())
