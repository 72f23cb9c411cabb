"""Extended rationals: exact ``Fraction`` values plus a bottom element."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union


class _NegInf:
    """The bottom element; compares below every rational."""

    _instance: _NegInf | None = None

    def __new__(cls) -> _NegInf:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "-inf"

    def __reduce__(self):
        return (_NegInf, ())

    def __hash__(self) -> int:
        return hash("discrete_exchange.-inf")

    def __eq__(self, other: object) -> bool:
        return other is self

    def __lt__(self, other: object) -> bool:
        return other is not self

    def __le__(self, other: object) -> bool:
        return True

    def __gt__(self, other: object) -> bool:
        return False

    def __ge__(self, other: object) -> bool:
        return other is self


NEG_INF = _NegInf()

ExtValue = Union[Fraction, _NegInf]


def is_finite(value: ExtValue) -> bool:
    return value is not NEG_INF


def parse_value(raw: object) -> ExtValue:
    """Parse ``"p/q"``, an integer, or ``"-inf"`` into an exact value."""
    if isinstance(raw, bool):
        raise ValueError(f"not a rational: {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        text = raw.strip()
        if text in ("-inf", "-infinity", "-Infinity"):
            return NEG_INF
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {raw!r}") from exc
    if isinstance(raw, Fraction):
        return raw
    raise ValueError(f"not a rational: {raw!r}")


def format_value(value: ExtValue) -> str:
    if value is NEG_INF:
        return "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def ceil_value(value: ExtValue) -> int:
    if value is NEG_INF:
        raise ValueError("cannot take the ceiling of -inf")
    return math.ceil(Fraction(value))
