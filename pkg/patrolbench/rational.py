# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Exact rational helpers shared by the simulator, the metrics and the config schema.
"""

import math
from decimal import Context, Decimal
from fractions import Fraction
from typing import Any, Union

# Marker for unbounded values (a tail start that never activates, a node that is never visited).
INFINITY = math.inf

Rational = Union[Fraction, float]


def to_rational(value: Any) -> Fraction:
    r"""Converts ints, decimal strings, ``"p/q"`` strings and floats into an exact Fraction.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10`` and not the
    binary expansion of the float.

    Args:
        value (Any):
            Value to convert.
    Returns:
        value (Fraction):
            Exact rational.
    Raises:
        ValueError: If the value is not a finite number.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("{} is not a finite rational".format(value))
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError("cannot parse {!r} as a rational".format(value)) from e
    raise ValueError("cannot parse {!r} as a rational".format(value))


def to_rational_or_infinity(value: Any) -> Rational:
    r"""Like ``to_rational`` but also accepts ``inf``, ``"inf"``, ``"infinity"`` and ``None`` as the unbounded marker."""
    if value is None:
        return INFINITY
    if isinstance(value, float) and math.isinf(value) and value > 0:
        return INFINITY
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return INFINITY
    return to_rational(value)


def is_infinite(value: Rational) -> bool:
    return isinstance(value, float) and math.isinf(value)


def format_decimal(value: Rational, precision: int = 12) -> str:
    r"""Renders an exact rational as a decimal string with ``precision`` significant digits.

    Args:
        value (Fraction or float):
            Exact value, or the ``INFINITY`` marker.
        precision (int):
            Number of significant digits.
    Returns:
        text (str):
            ``"inf"`` for the unbounded marker, otherwise a plain decimal string.
    """
    if is_infinite(value):
        return "inf"
    value = Fraction(value)
    ctx = Context(prec=precision)
    number = ctx.divide(Decimal(value.numerator), Decimal(value.denominator))
    text = format(number, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def rational_to_str(value: Rational) -> str:
    r"""Lossless text form used in logs and reports: ``"3/2"``, ``"5"`` or ``"inf"``."""
    if is_infinite(value):
        return "inf"
    return str(Fraction(value))


def rational_from_str(text: str) -> Rational:
    return to_rational_or_infinity(text)
