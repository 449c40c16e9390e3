from __future__ import annotations

import hashlib
import math
import re
import sys

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import TYPE_CHECKING

import mpmath

from mpmath import iv

from graphdyn.exceptions import FormatError


if TYPE_CHECKING:
    from collections.abc import Iterator


_RATIONAL_RE = re.compile(r"^(-?)(0|[1-9][0-9]*)/([1-9][0-9]*)$")

# Longer offsets are named by digest inside partition ids.
TAG_BITS = 96
TAG_DIGEST = 16


def parse_rational(text: object, position: str | None = None) -> Fraction:
    """
    Parse a canonical ``p/q`` string.

    The slash is mandatory, the fraction must be in lowest terms and the
    denominator positive, so every rational has exactly one spelling.
    """
    if not isinstance(text, str):
        raise FormatError(f"expected a 'p/q' string, got {text!r}", position)

    match = _RATIONAL_RE.match(text)
    if match is None:
        raise FormatError(f"'{text}' is not a canonical 'p/q' rational", position)

    sign, numerator, denominator = match.groups()
    with unlimited_digits():
        p, q = int(numerator), int(denominator)
    if math.gcd(p, q) != 1:
        raise FormatError(f"'{text}' is not in lowest terms", position)
    if sign and p == 0:
        raise FormatError(f"'{text}' has a negative zero", position)

    return Fraction(-p if sign else p, q)


@contextmanager
def unlimited_digits() -> Iterator[None]:
    """Lift the interpreter's limit on decimal conversions of long integers."""
    get_limit = getattr(sys, "get_int_max_str_digits", None)
    if get_limit is None:
        yield
        return
    previous = get_limit()
    sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        sys.set_int_max_str_digits(previous)


def format_rational(value: Fraction | int) -> str:
    value = Fraction(value)
    with unlimited_digits():
        return f"{value.numerator}/{value.denominator}"


def rational_tag(value: Fraction | int) -> str:
    """
    ``p/q`` for rationals of at most ``TAG_BITS`` bits, a stable digest
    ``~<hex>`` of the exact value otherwise.
    """
    value = Fraction(value)
    p, q = value.numerator, value.denominator
    if abs(p).bit_length() + q.bit_length() <= TAG_BITS:
        return format_rational(value)
    digest = hashlib.sha256(f"{p:x}/{q:x}".encode()).hexdigest()
    return f"~{digest[:TAG_DIGEST]}"


def to_interval(value: Fraction | int) -> mpmath.ctx_iv.ivmpf:
    value = Fraction(value)
    return iv.mpf(value.numerator) / iv.mpf(value.denominator)


@total_ordering
@dataclass(frozen=True, eq=False)
class LogValue:
    """
    The real number ``log(radicand) / root``.

    Values are compared exactly through the radicands, never through
    floating point logarithms.
    """

    radicand: Fraction
    root: int = 1

    def __post_init__(self) -> None:
        if self.radicand <= 0:
            raise ValueError("radicand must be positive")
        if self.root < 1:
            raise ValueError("root must be a positive integer")
        object.__setattr__(self, "radicand", Fraction(self.radicand))

    @classmethod
    def zero(cls) -> LogValue:
        return cls(Fraction(1))

    @property
    def is_zero(self) -> bool:
        return self.radicand == 1

    def _key(self, other: LogValue) -> tuple[Fraction, Fraction]:
        return self.radicand**other.root, other.radicand**self.root

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LogValue):
            return NotImplemented
        left, right = self._key(other)
        return left == right

    def __lt__(self, other: LogValue) -> bool:
        left, right = self._key(other)
        return left < right

    def __hash__(self) -> int:
        return hash(self.normalized().astuple())

    def astuple(self) -> tuple[Fraction, int]:
        return self.radicand, self.root

    def normalized(self) -> LogValue:
        """Reduce ``log(q^j)/(j*k)`` to ``log(q)/k`` where possible."""
        radicand, root = self.radicand, self.root
        for prime in _small_primes_dividing(root):
            while root % prime == 0:
                base = _integer_root(radicand, prime)
                if base is None:
                    break
                radicand, root = base, root // prime
        return LogValue(radicand, root)

    def scaled(self, factor: int) -> LogValue:
        """Return ``factor * self`` for a positive integer factor."""
        return LogValue(self.radicand**factor, self.root).normalized()

    def divided(self, divisor: int) -> LogValue:
        return LogValue(self.radicand, self.root * divisor).normalized()

    def interval(self) -> mpmath.ctx_iv.ivmpf:
        return iv.log(to_interval(self.radicand)) / self.root

    def approximate(self, digits: int = 12) -> str:
        with mpmath.workdps(digits + 10):
            value = mpmath.log(mpmath.mpf(self.radicand.numerator)) - mpmath.log(
                mpmath.mpf(self.radicand.denominator)
            )
            return mpmath.nstr(value / self.root, digits)

    def __float__(self) -> float:
        numerator, denominator = self.radicand.numerator, self.radicand.denominator
        return (math.log(numerator) - math.log(denominator)) / self.root

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        radicand = (
            str(self.radicand.numerator)
            if self.radicand.denominator == 1
            else format_rational(self.radicand)
        )
        if self.root == 1:
            return f"log({radicand})"
        return f"log({radicand})/{self.root}"


def certainly_less(
    left: LogValue, right: LogValue, slack: Fraction = Fraction(0)
) -> bool:
    """Return True when ``left < right + slack`` is proven."""
    if slack == 0:
        return left < right
    return bool((left.interval() < right.interval() + to_interval(slack)) is True)


def width_at_most(lower: LogValue, upper: LogValue, tolerance: Fraction) -> bool:
    if lower == upper:
        return True
    difference = upper.interval() - lower.interval()
    return bool((difference <= to_interval(tolerance)) is True)


def simplest_above(bound: LogValue, limit: LogValue, slack: Fraction) -> Fraction:
    """
    The simplest rational ``r`` with ``bound < log r < limit + slack``.

    Simplest means smallest denominator, then smallest numerator.
    """
    low = math.exp(float(bound))
    for denominator in _denominators():
        start = max(1, math.floor(low * denominator) - 1)
        for numerator in range(start, start + 4):
            candidate = Fraction(numerator, denominator)
            if candidate.denominator != denominator:
                continue
            value = LogValue(candidate) if candidate > 0 else None
            if value is None or not bound < value:
                continue
            if certainly_less(value, limit, slack):
                return candidate
            break
    raise AssertionError("unreachable")


def simplest_between(low: Fraction, limit: LogValue, slack: Fraction) -> Fraction:
    """The simplest rational ``s > low`` with ``log s < limit + slack``."""
    for denominator in _denominators():
        candidate = Fraction(math.floor(low * denominator) + 1, denominator)
        if candidate.denominator != denominator:
            continue
        if certainly_less(LogValue(candidate), limit, slack):
            return candidate
    raise AssertionError("unreachable")


def _denominators() -> Iterator[int]:
    denominator = 1
    while True:
        yield denominator
        denominator += 1


def _small_primes_dividing(n: int) -> list[int]:
    primes = []
    candidate = 2
    while candidate * candidate <= n:
        if n % candidate == 0:
            primes.append(candidate)
            while n % candidate == 0:
                n //= candidate
        candidate += 1
    if n > 1:
        primes.append(n)
    return primes


def _integer_root(value: Fraction, degree: int) -> Fraction | None:
    numerator = _exact_int_root(value.numerator, degree)
    denominator = _exact_int_root(value.denominator, degree)
    if numerator is None or denominator is None:
        return None
    return Fraction(numerator, denominator)


def _exact_int_root(value: int, degree: int) -> int | None:
    if value.bit_length() > 4096:
        return None
    guess = round(value ** (1 / degree)) if value < 2**1000 else None
    if guess is None:
        guess = _newton_root(value, degree)
    for candidate in (guess - 1, guess, guess + 1):
        if candidate > 0 and candidate**degree == value:
            return candidate
    return None


def _newton_root(value: int, degree: int) -> int:
    x = 1 << ((value.bit_length() + degree - 1) // degree)
    while True:
        y = ((degree - 1) * x + value // x ** (degree - 1)) // degree
        if y >= x:
            return x
        x = y
