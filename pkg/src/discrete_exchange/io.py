"""JSON formats for economies, NTU games and fractional matrices.

Rational values are written as strings ``"p/q"`` or integers; ``"-inf"``
marks an excluded bundle. Bundles are lists of object ids.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .model import (
    AdditiveUtility,
    CategoricalUtility,
    DichotomousUtility,
    Economy,
    HousingUtility,
    TableUtility,
    UtilityFunction,
)
from .oracle import NTUGame
from .rounding import FractionalMatrix
from .values import format_value, parse_value


class FormatError(ValueError):
    """Malformed input; ``line``/``col`` locate JSON syntax errors."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


def parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, exc.colno) from None


def read_json(path: str | Path) -> Any:
    return parse_json(Path(path).read_text())


def _need(data: Mapping, key: str, where: str) -> Any:
    if not isinstance(data, Mapping) or key not in data:
        raise FormatError(f"{where}: missing field {key!r}")
    return data[key]


def _value(raw: Any, where: str):
    try:
        return parse_value(raw)
    except (ValueError, TypeError, ZeroDivisionError):
        raise FormatError(f"{where}: bad value {raw!r}") from None


# ---------------------------------------------------------------------------
# economies


def _utility_from_json(data: Mapping, agent: str, category_of: dict[str, str] | None) -> UtilityFunction:
    where = f"utility of {agent}"
    kind = _need(data, "kind", where)
    if kind == "table":
        values = {}
        for n, entry in enumerate(_need(data, "values", where)):
            bundle = frozenset(_need(entry, "bundle", f"{where}, entry {n}"))
            values[bundle] = _value(_need(entry, "value", f"{where}, entry {n}"), where)
        return TableUtility(values)
    if kind == "dichotomous":
        return DichotomousUtility(frozenset(_need(data, "good", where)))
    if kind == "categorical":
        if category_of is None:
            raise FormatError(f"{where}: categorical utility needs economy categories")
        return CategoricalUtility(frozenset(_need(data, "acceptable", where)), category_of)
    if kind == "additive":
        weights = {o: _value(w, where) for o, w in _need(data, "weights", where).items()}
        return AdditiveUtility(weights)
    if kind == "housing":
        return HousingUtility(tuple(_need(data, "ranking", where)))
    raise FormatError(f"{where}: unknown utility kind {kind!r}")


def economy_from_json(data: Mapping) -> Economy:
    if not isinstance(data, Mapping):
        raise FormatError("economy must be a JSON object")
    objects = list(_need(data, "objects", "economy"))
    agents = list(_need(data, "agents", "economy"))
    endowments = _need(data, "endowments", "economy")
    categories = data.get("categories")
    category_of = None
    if categories is not None:
        category_of = {o: k for k, objs in categories.items() for o in objs}
    utilities = {a: _utility_from_json(u, a, category_of) for a, u in _need(data, "utilities", "economy").items()}
    return Economy.create(objects, agents, endowments, utilities, categories, name=data.get("name", ""))


def _utility_to_json(e: Economy, util: UtilityFunction) -> dict:
    if isinstance(util, TableUtility):
        entries = sorted(util.values.items(), key=lambda kv: e.mask_of(kv[0]))
        return {
            "kind": "table",
            "values": [{"bundle": e.sorted_bundle(b), "value": format_value(v)} for b, v in entries],
        }
    if isinstance(util, DichotomousUtility):
        return {"kind": "dichotomous", "good": e.sorted_bundle(util.good)}
    if isinstance(util, CategoricalUtility):
        return {"kind": "categorical", "acceptable": e.sorted_bundle(util.acceptable)}
    if isinstance(util, AdditiveUtility):
        return {"kind": "additive", "weights": {o: format_value(util.weights[o]) for o in e.objects if o in util.weights}}
    if isinstance(util, HousingUtility):
        return {"kind": "housing", "ranking": list(util.ranking)}
    raise TypeError(f"cannot serialize {type(util).__name__}")


def economy_to_json(e: Economy) -> dict:
    out: dict[str, Any] = {}
    if e.name:
        out["name"] = e.name
    out["objects"] = list(e.objects)
    out["agents"] = list(e.agents)
    out["endowments"] = {a: e.sorted_bundle(e.endowments[a]) for a in e.agents}
    if e.categories is not None:
        out["categories"] = {k: list(v) for k, v in e.categories.items()}
    out["utilities"] = {a: _utility_to_json(e, e.utilities[a]) for a in e.agents}
    return out


# ---------------------------------------------------------------------------
# NTU games


def ntu_from_json(data: Mapping) -> NTUGame:
    agents = tuple(_need(data, "agents", "game"))
    gens = {}
    for n, entry in enumerate(_need(data, "coalitions", "game")):
        where = f"coalition entry {n}"
        s = tuple(_need(entry, "coalition", where))
        gens[s] = tuple(tuple(_value(x, where) for x in g) for g in _need(entry, "generators", where))
    try:
        return NTUGame(agents, gens)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def ntu_to_json(g: NTUGame) -> dict:
    return {
        "kind": "ntu",
        "agents": list(g.agents),
        "coalitions": [
            {"coalition": list(s), "generators": [[format_value(x) for x in vec] for vec in gens]}
            for s, gens in g.generators.items()
        ],
    }


# ---------------------------------------------------------------------------
# matrices


def matrix_from_json(data: Mapping) -> tuple[FractionalMatrix, dict | None, dict | None]:
    """The matrix plus optional categories and row-to-agent map."""
    for key in ("rows", "cols", "entries", "targets"):
        _need(data, key, "matrix")
    try:
        m = FractionalMatrix.from_json(data)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"matrix: {exc}") from None
    return m, data.get("categories"), data.get("agent_of")


def matrix_to_json(m: FractionalMatrix, categories: Mapping | None = None) -> dict:
    out = {"kind": "matrix", **m.to_json()}
    if categories is not None:
        out["categories"] = {k: list(v) for k, v in categories.items()}
    return out


def load(path: str | Path):
    """Economy, NTU game or matrix, chosen by the file's ``kind`` field."""
    data = read_json(path)
    if not isinstance(data, Mapping):
        raise FormatError("top level must be a JSON object")
    kind = data.get("kind", "economy")
    if kind == "economy":
        return economy_from_json(data)
    if kind == "ntu":
        return ntu_from_json(data)
    if kind == "matrix":
        return matrix_from_json(data)
    raise FormatError(f"unknown document kind {kind!r}")


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"

