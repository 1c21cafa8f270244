"""Computation context: working region, coefficient mode, tolerance.

Coefficients live in one of two modes, fixed per computation: exact
(``fractions.Fraction``, equality is exact) or float (double precision,
equality is |a-b| <= tol).  Exact mode refuses operations whose result is
transcendental or an imperfect root and raises ``NeedsFloatMode`` instead of
silently approximating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import NeedsFloatMode
from .grid import Region

EXACT = "exact"
FLOAT = "float"


@dataclass(frozen=True)
class Context:
    region: Region
    mode: str = EXACT
    tol: float = 1e-12

    def __post_init__(self):
        if self.mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def with_region(self, region: Region) -> "Context":
        return replace(self, region=region)

    def inflate(self, dk: int, dalpha=0) -> "Context":
        return self.with_region(
            Region(self.region.alpha_max + Fraction(dalpha), self.region.k_max + dk)
        )

    def coef(self, value):
        """Coerce a scalar into this context's coefficient mode."""
        if self.exact:
            if isinstance(value, float):
                return Fraction(value)
            return Fraction(value)
        return float(value)

    def is_zero(self, c) -> bool:
        if self.exact:
            return c == 0
        return abs(c) <= self.tol

    def eq(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol


def _iroot(n: int, q: int) -> int | None:
    """Exact integer q-th root of n >= 0, or None."""
    if n < 0:
        return None
    r = round(n ** (1.0 / q)) if n > 0 else 0
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    return None


def cpow(base, expo: Fraction, ctx: Context):
    """base ** expo for positive base and rational expo.

    Exact mode succeeds only when the result is rational (integer exponent,
    or a perfect root); otherwise NeedsFloatMode.
    """
    expo = Fraction(expo)
    if not ctx.exact:
        return float(base) ** float(expo)
    base = Fraction(base)
    if base <= 0:
        if base == 0:
            if expo <= 0:
                raise ZeroDivisionError("0 ** nonpositive")
            return Fraction(0)
        raise NeedsFloatMode(f"({base}) ** {expo} needs a positive base in exact mode")
    if expo.denominator == 1:
        return base ** int(expo)
    num = _iroot(base.numerator, expo.denominator)
    den = _iroot(base.denominator, expo.denominator)
    if num is None or den is None:
        raise NeedsFloatMode(f"{base} ** {expo} is irrational")
    return Fraction(num, den) ** expo.numerator


def clog(a, ctx: Context):
    if not ctx.exact:
        return math.log(float(a))
    if Fraction(a) == 1:
        return Fraction(0)
    raise NeedsFloatMode(f"log({a}) is transcendental")


def cexp(a, ctx: Context):
    if not ctx.exact:
        return math.exp(float(a))
    if Fraction(a) == 0:
        return Fraction(1)
    raise NeedsFloatMode(f"exp({a}) is transcendental")


def binomial(alpha, j: int):
    """Generalized binomial coefficient C(alpha, j) for rational/float alpha."""
    if j < 0:
        raise ValueError("j must be >= 0")
    out = Fraction(1) if not isinstance(alpha, float) else 1.0
    for i in range(j):
        out = out * (alpha - i) / (i + 1)
    return out
