"""Exact powers of ``p`` with exponents that may be logarithms.

Dimension exponents such as ``s = 2*log_3(2)`` are irrational, but ``3^s = 4``
is not.  :class:`Exponent` stores ``s`` through ``p^s = coef * p^exp`` with
rational ``coef`` and ``exp``, which covers rational exponents (``coef = 1``)
and logarithms of rationals (``exp = 0``).  Products of such powers with
rationals are :class:`PValue` instances and compare exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class PValue:
    """The positive real ``coef * p^exp`` (or zero when ``coef == 0``)."""

    p: int
    coef: Fraction
    exp: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coef", Fraction(self.coef))
        object.__setattr__(self, "exp", Fraction(self.exp))
        if self.coef < 0:
            raise ValueError("PValue must be nonnegative")

    def __mul__(self, other):
        if isinstance(other, PValue):
            _same_base(self, other)
            return PValue(self.p, self.coef * other.coef, self.exp + other.exp)
        return PValue(self.p, self.coef * Fraction(other), self.exp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PValue):
            _same_base(self, other)
            return PValue(self.p, self.coef / other.coef, self.exp - other.exp)
        return PValue(self.p, self.coef / Fraction(other), self.exp)

    def __float__(self) -> float:
        if self.coef == 0:
            return 0.0
        return float(self.coef) * float(self.p) ** float(self.exp)

    def log_p(self) -> float:
        return math.log(self.coef) / math.log(self.p) + float(self.exp)

    def rational(self) -> Fraction | None:
        """The exact rational value, or ``None`` when it is irrational."""
        if self.coef == 0 or self.exp == 0:
            return self.coef
        if self.exp.denominator == 1:
            return self.coef * Fraction(self.p) ** int(self.exp)
        return None

    def cmp(self, other: "PValue | Fraction | int") -> int:
        """Exact three-way comparison: -1, 0 or 1."""
        if not isinstance(other, PValue):
            other = PValue(self.p, Fraction(other))
        _same_base(self, other)
        if self.coef == 0 or other.coef == 0:
            return (self.coef > 0) - (other.coef > 0)
        # coef1 * p^e1 vs coef2 * p^e2  <=>  (coef1/coef2)^D vs p^((e2-e1)*D)
        ratio = self.coef / other.coef
        d = other.exp - self.exp
        den = d.denominator
        lhs = ratio**den
        rhs = Fraction(self.p) ** d.numerator
        return (lhs > rhs) - (lhs < rhs)

    def __eq__(self, other):
        if isinstance(other, (PValue, Fraction, int)):
            return self.cmp(other) == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.p, float(self)))

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def __str__(self) -> str:
        if self.exp == 0:
            return str(self.coef)
        return f"{self.coef}*{self.p}^({self.exp})"


def _same_base(a: PValue, b: PValue) -> None:
    if a.p != b.p:
        raise ValueError(f"base mismatch {a.p} vs {b.p}")


@dataclass(frozen=True)
class Exponent:
    """An exponent ``s`` given by ``p^s = coef * p^exp``."""

    p: int
    coef: Fraction = Fraction(1)
    exp: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coef", Fraction(self.coef))
        object.__setattr__(self, "exp", Fraction(self.exp))
        if self.coef <= 0:
            raise ValueError("log argument must be positive")

    @classmethod
    def rational(cls, p: int, s) -> "Exponent":
        return cls(p, Fraction(1), Fraction(s))

    @classmethod
    def log(cls, p: int, base) -> "Exponent":
        """``s = log_p(base)`` for a positive rational ``base``."""
        return cls(p, Fraction(base), Fraction(0))

    @classmethod
    def parse(cls, p: int, text: str) -> "Exponent":
        """Parse ``"u/v"``, ``"u"``, ``"log:q"`` (meaning ``log_p q``) or ``"u/v+log:q"``."""
        text = text.strip()
        m = re.fullmatch(r"(?:(-?\d+(?:/\d+)?)\+)?log:(\d+(?:/\d+)?)", text)
        if m:
            return cls(p, Fraction(m.group(2)), Fraction(m.group(1) or 0))
        if not re.fullmatch(r"-?\d+(?:/\d+)?", text):
            raise ValueError(f"bad exponent literal {text!r}; use 'u/v' or 'log:q'")
        return cls.rational(p, Fraction(text))

    def power(self, k: int | Fraction) -> PValue:
        """``p^(k*s)`` exactly (``k`` must be an integer when ``coef != 1``)."""
        k = Fraction(k)
        if self.coef != 1 and k.denominator != 1:
            raise ValueError("fractional powers of a logarithmic exponent are not exact")
        return PValue(self.p, self.coef ** int(k) if self.coef != 1 else Fraction(1), self.exp * k)

    def complement(self, total: int = 2) -> "Exponent":
        """The exponent ``total - s``."""
        return Exponent(self.p, 1 / self.coef, total - self.exp)

    def __float__(self) -> float:
        return float(self.exp) + math.log(self.coef) / math.log(self.p)

    def __str__(self) -> str:
        if self.coef == 1:
            return str(self.exp)
        if self.exp == 0:
            return f"log:{self.coef}"
        return f"{self.exp}+log:{self.coef}"
