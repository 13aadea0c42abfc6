"""Exact rational literals shared by the .pg and .kir formats."""

from __future__ import annotations

import re
from fractions import Fraction

_RATIONAL = re.compile(r"^([+-]?)(\d+)(?:/(\d+)|\.(\d+))?$")


def parse_rational(text: str) -> Fraction:
    """Parse `-3/2`, `7` or `0.125` exactly. Raises ValueError otherwise."""
    m = _RATIONAL.match(text.strip())
    if not m:
        raise ValueError(f"not a rational literal: {text!r}")
    sign, whole, den, frac = m.groups()
    if den is not None:
        if int(den) == 0:
            raise ValueError(f"zero denominator: {text!r}")
        q = Fraction(int(whole), int(den))
    elif frac is not None:
        q = Fraction(int(whole + frac), 10 ** len(frac))
    else:
        q = Fraction(int(whole))
    return -q if sign == "-" else q


def format_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
