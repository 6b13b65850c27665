"""Exact rational helpers shared by the population-level code."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, Fraction, str]


def as_fraction(value: Number) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction.

    Floats are refused: population masses must be exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def fraction_str(value: Fraction) -> str:
    """Canonical ``"num/den"`` text, denominator always written."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def normalize_weights(weights: Iterable[int]) -> list[Fraction]:
    weights = list(weights)
    total = sum(weights)
    if total <= 0:
        raise ValueError("weights must have a positive sum")
    return [Fraction(w, total) for w in weights]
