from __future__ import annotations

import math

from fractions import Fraction

import pytest

from graphdyn.exceptions import FormatError
from graphdyn.rationals import LogValue
from graphdyn.rationals import certainly_less
from graphdyn.rationals import format_rational
from graphdyn.rationals import parse_rational
from graphdyn.rationals import rational_tag
from graphdyn.rationals import simplest_above
from graphdyn.rationals import simplest_between
from graphdyn.rationals import width_at_most


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("0/1", Fraction(0)),
        ("1/3", Fraction(1, 3)),
        ("-5/2", Fraction(-5, 2)),
        ("12/1", Fraction(12)),
    ],
)
def test_parse_rational_accepts_canonical_spelling(
    text: str, expected: Fraction
) -> None:
    assert parse_rational(text) == expected
    assert format_rational(expected) == text


@pytest.mark.parametrize(
    ("value", "message"),
    [
        ("2/4", "lowest terms"),
        ("1", "canonical"),
        ("1/0", "canonical"),
        ("01/3", "canonical"),
        ("-0/1", "negative zero"),
        (0.5, "expected"),
    ],
)
def test_parse_rational_rejects_other_spellings(value: object, message: str) -> None:
    with pytest.raises(FormatError, match=message):
        parse_rational(value, "$.length")


def test_format_error_carries_its_position() -> None:
    with pytest.raises(FormatError) as e:
        parse_rational("2/4", "$.edges[0].length")

    assert e.value.position == "$.edges[0].length"
    assert str(e.value).startswith("$.edges[0].length: ")


def test_rationals_beyond_the_decimal_conversion_limit() -> None:
    value = Fraction(1, 7**6000)

    text = format_rational(value)

    assert len(text) > 5000
    assert parse_rational(text) == value


def test_short_rationals_are_their_own_tag() -> None:
    assert rational_tag(Fraction(2, 7)) == "2/7"
    assert rational_tag(Fraction(-1, 3)) == "-1/3"


def test_long_rationals_are_tagged_by_digest() -> None:
    value = Fraction(1, 3**200)

    tag = rational_tag(value)

    assert tag.startswith("~")
    assert len(tag) == 17
    assert tag == rational_tag(Fraction(1, 3**200))
    assert tag != rational_tag(Fraction(2, 3**200))


def test_log_values_compare_exactly() -> None:
    assert LogValue(Fraction(9), 2) == LogValue(Fraction(3))
    assert LogValue(Fraction(3), 2) < LogValue(Fraction(2))
    assert LogValue(Fraction(3), 4) < LogValue(Fraction(3), 3)
    assert hash(LogValue(Fraction(9), 4)) == hash(LogValue(Fraction(3), 2))


def test_log_value_normalizes_and_displays() -> None:
    value = LogValue(Fraction(81), 4)

    assert value.normalized().astuple() == (Fraction(3), 1)
    assert str(LogValue(Fraction(3), 2)) == "log(3)/2"
    assert str(LogValue(Fraction(7, 4))) == "log(7/4)"
    assert str(LogValue.zero()) == "0"


def test_log_value_scaling() -> None:
    assert LogValue(Fraction(3), 4).scaled(4) == LogValue(Fraction(3))
    assert LogValue(Fraction(3)).divided(2) == LogValue(Fraction(3), 2)


def test_log_value_interval_contains_float_value() -> None:
    value = LogValue(Fraction(3), 2)
    interval = value.interval()

    assert interval.a <= math.log(3) / 2 <= interval.b
    assert float(value) == pytest.approx(math.log(3) / 2)
    assert value.approximate().startswith("0.549306144")


@pytest.mark.parametrize(
    ("radicand", "root"),
    [
        (Fraction(0), 1),
        (Fraction(-1), 1),
        (Fraction(2), 0),
    ],
)
def test_log_value_rejects_bad_parts(radicand: Fraction, root: int) -> None:
    with pytest.raises(ValueError):
        LogValue(radicand, root)


def test_certainly_less_with_slack() -> None:
    sqrt3 = LogValue(Fraction(3), 2)

    assert certainly_less(LogValue(Fraction(7, 4)), sqrt3, Fraction(1, 10))
    assert not certainly_less(LogValue(Fraction(2)), sqrt3, Fraction(1, 10))
    assert not certainly_less(sqrt3, sqrt3)


def test_width_at_most() -> None:
    low = LogValue(Fraction(3), 2)
    high = LogValue(Fraction(7, 4))

    assert width_at_most(low, low, Fraction(0))
    assert width_at_most(low, high, Fraction(1, 50))
    assert not width_at_most(low, high, Fraction(1, 100))


def test_simplest_rationals_above_the_square_root_of_three() -> None:
    sqrt3 = LogValue(Fraction(3), 2)
    slack = Fraction(3, 40)

    r = simplest_above(sqrt3, sqrt3, slack)
    s = simplest_between(r, sqrt3, slack)

    assert r == Fraction(7, 4)
    assert s == Fraction(9, 5)
