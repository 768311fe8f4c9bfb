"""Exact-rational display formatting shared by reports."""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction

HALF_UP = ROUND_HALF_UP
HALF_EVEN = ROUND_HALF_EVEN


def percent_string(fraction: Fraction, decimals: int = 1, rounding: str = HALF_UP) -> str:
    """Format an exact rational as a percentage with fixed decimals.

    Rounding happens on the exact decimal expansion, never on a binary
    float, so midpoint values round predictably under the chosen mode.
    """
    with localcontext() as ctx:
        ctx.prec = 40
        value = Decimal(fraction.numerator) * 100 / Decimal(fraction.denominator)
        quantum = Decimal(1).scaleb(-decimals)
        return str(value.quantize(quantum, rounding=rounding))


def fraction_payload(fraction: Fraction | None) -> dict:
    """JSON-friendly view of an exact rational (None encodes a 0-over-0 sentinel)."""
    if fraction is None:
        return {"numerator": 0, "denominator": 0, "value": None}
    return {
        "numerator": fraction.numerator,
        "denominator": fraction.denominator,
        "value": float(fraction),
    }
