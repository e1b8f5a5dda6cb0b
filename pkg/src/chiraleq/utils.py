"""Small shared helpers: exact rationals as strings, thread budget."""
from __future__ import annotations

import os
from fractions import Fraction


def Q(x) -> Fraction:
    """Coerce ints, Fractions or 'p/q' strings to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_frac(x)
    raise TypeError(f"not an exact rational: {x!r}")


def parse_frac(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def frac_str(x: Fraction) -> str:
    """Render a rational as 'p' or 'p/q'; never decimals."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def thread_count() -> int:
    """Parallelism cap from CHIRAL_THREADS; 1 when unset or malformed."""
    raw = os.environ.get("CHIRAL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
