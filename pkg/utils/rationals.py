"""
Exact rational helpers: parsing "p/q" strings and rendering results.
"""

import math
from fractions import Fraction
from numbers import Rational

from utils.error_handlers import InvalidParameterError


def to_fraction(value):
    """
    Convert an int, Fraction or "p/q" / decimal string to a Fraction exactly.

    Floats are rejected: they would silently break exactness.
    """
    if isinstance(value, bool):
        raise InvalidParameterError(f"Not a rational number: {value!r}")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParameterError(f"Not a rational number: {value!r}") from exc
    raise InvalidParameterError(f"Not a rational number: {value!r}")


def render(value):
    """Render an exact quantity as "p/q" (or "p" for integers)."""
    if value is None:
        return None
    return str(Fraction(value))


def render_float(value):
    if value is None:
        return None
    return repr(float(value))


def ceil_sqrt(value):
    """Smallest integer s >= 0 with s*s >= value, for a nonnegative rational."""
    value = Fraction(value)
    s = math.isqrt(math.ceil(value))
    while s * s < value:
        s += 1
    return s


def lcm_of_denominators(values):
    result = 1
    for v in values:
        result = math.lcm(result, Fraction(v).denominator)
    return result
