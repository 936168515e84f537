"""Exact rational parsing and formatting.

All values, capacities, thresholds, and probabilities in this package are
`fractions.Fraction`: canonical reduced form, positive denominator, exact
arithmetic. Floats never enter mechanism logic.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InstanceError


def parse_rational(raw: object, context: str = "value") -> Fraction:
    """Parse "3", "1/10", "2.5", or a plain int into an exact Fraction.

    Floats are rejected: a JSON number like 2.5 already went through binary
    floating point, so non-integers must be written as strings.
    """
    if isinstance(raw, bool):
        raise InstanceError(f"malformed rational for {context}: {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"malformed rational for {context}: {raw!r}") from exc
    if isinstance(raw, float):
        raise InstanceError(
            f"malformed rational for {context}: {raw!r} (write non-integers as strings)"
        )
    raise InstanceError(f"malformed rational for {context}: {raw!r}")


def format_rational(x: Fraction) -> str:
    """Render a Fraction as "3" or "5/2" (inverse of parse_rational)."""
    return str(x)
