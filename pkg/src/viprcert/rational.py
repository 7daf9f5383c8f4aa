"""Exact rational arithmetic for certificate semantics.

Every number that carries meaning in a certificate (coefficients,
right-hand sides, multipliers, bounds, solution coordinates) is a
`Rational`.  Values are kept in canonical form at all times: positive
denominator, gcd(|numerator|, denominator) = 1, so equality is
structural.  The stdlib `fractions.Fraction` already guarantees exactly
this, and is arbitrary precision; this module adds the strict text
syntax (`p` or `p/q`, never decimals) used by the certificate format.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

__all__ = [
    "Rational",
    "ZERO",
    "ONE",
    "RationalSyntaxError",
    "DecimalNotationError",
    "MalformedNumberError",
    "ZeroDenominatorError",
    "parse_rational",
    "format_rational",
    "floor_int",
    "ceil_int",
    "is_integer",
]


class RationalSyntaxError(ValueError):
    """A token does not denote a rational in the accepted syntax."""


class DecimalNotationError(RationalSyntaxError):
    """Decimal notation is rejected outright, never converted."""


class MalformedNumberError(RationalSyntaxError):
    """Token is neither an integer literal nor a `p/q` fraction."""


class ZeroDenominatorError(RationalSyntaxError):
    """Fraction literal with denominator zero."""


_INTEGER = re.compile(r"[+-]?\d+\Z")
_FRACTION = re.compile(r"([+-]?\d+)/([+-]?\d+)\Z")


def parse_rational(token: str) -> Rational:
    """Parse `p` or `p/q` into a canonical Rational.

    Decimal notation raises DecimalNotationError; a zero denominator
    raises ZeroDenominatorError; anything else non-conforming raises
    MalformedNumberError.  A signed denominator is normalized into the
    numerator.
    """
    if "." in token:
        raise DecimalNotationError(
            f"decimal notation is not accepted, write a fraction instead: {token!r}"
        )
    if _INTEGER.match(token):
        return Fraction(int(token))
    m = _FRACTION.match(token)
    if m is None:
        raise MalformedNumberError(f"not an integer or p/q fraction: {token!r}")
    denominator = int(m.group(2))
    if denominator == 0:
        raise ZeroDenominatorError(f"zero denominator: {token!r}")
    return Fraction(int(m.group(1)), denominator)


def format_rational(value: Rational) -> str:
    """Canonical text form: `p` for integers, `p/q` otherwise."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def floor_int(value: Rational) -> int:
    """Largest integer <= value, exactly."""
    return math.floor(value)


def ceil_int(value: Rational) -> int:
    """Smallest integer >= value, exactly."""
    return math.ceil(value)


def is_integer(value: Rational) -> bool:
    return value.denominator == 1
