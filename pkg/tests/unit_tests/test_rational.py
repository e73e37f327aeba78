# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import math
import unittest
from fractions import Fraction

import pytest
from ddt import data, ddt, unpack
from hypothesis import given, strategies as st

from patrolbench.errors import ActionMaskError, ConfigError, PatrolBenchError, SchemaError, VerificationFailure
from patrolbench.rational import (
    INFINITY,
    format_decimal,
    is_infinite,
    rational_from_str,
    rational_to_str,
    to_rational,
    to_rational_or_infinity,
)


@ddt
class TestToRational(unittest.TestCase):
    @data(
        (3, Fraction(3)),
        ("1/2", Fraction(1, 2)),
        (" 3/2 ", Fraction(3, 2)),
        ("0.1", Fraction(1, 10)),
        (0.1, Fraction(1, 10)),
        (Fraction(7, 3), Fraction(7, 3)),
    )
    @unpack
    def test_parses(self, raw, expected):
        assert to_rational(raw) == expected

    @data("abc", "1/0", True, None, [1], float("nan"), float("inf"))
    def test_rejects(self, raw):
        with pytest.raises(ValueError):
            to_rational(raw)

    @data(None, "inf", "Infinity", math.inf)
    def test_infinity_markers(self, raw):
        assert is_infinite(to_rational_or_infinity(raw))

    def test_infinity_or_rational_passes_rationals(self):
        assert to_rational_or_infinity("5/4") == Fraction(5, 4)
        assert not is_infinite(Fraction(10**9))


@ddt
class TestFormatting(unittest.TestCase):
    @data(
        (Fraction(3, 2), 12, "1.5"),
        (Fraction(1, 3), 4, "0.3333"),
        (Fraction(40), 12, "40"),
        (Fraction(0), 12, "0"),
        (INFINITY, 12, "inf"),
    )
    @unpack
    def test_format_decimal(self, value, precision, expected):
        assert format_decimal(value, precision) == expected

    def test_exact_text(self):
        assert rational_to_str(Fraction(3, 2)) == "3/2"
        assert rational_to_str(Fraction(5)) == "5"
        assert rational_to_str(INFINITY) == "inf"
        assert rational_from_str("inf") == INFINITY


@given(st.fractions(), st.booleans())
def test_exact_text_reloads(value, as_infinity):
    value = INFINITY if as_infinity else value
    assert rational_from_str(rational_to_str(value)) == value


def test_error_hierarchy():
    assert issubclass(SchemaError, ConfigError)
    assert issubclass(VerificationFailure, PatrolBenchError)
    assert not issubclass(VerificationFailure, ConfigError)
    error = ActionMaskError("illegal", robot=2, event=7)
    assert (error.robot, error.event, str(error)) == (2, 7, "illegal")
