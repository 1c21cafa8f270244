"""Exponent grid for power-log monomials x^alpha * L^k, where L = -1/log x.

An exponent is a pair (alpha, k) with alpha an exact rational and k an
integer, ordered lexicographically: that order matches the size order of the
monomials as germs at 0+ (larger exponent = smaller germ).  Exponents with
alpha > 0 index monomials of the main class; alpha <= 0 only ever appears in
intermediate "ambient" values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import DomainError

Rat = Fraction


def _rat(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("exponents must be exact rationals, not floats")
    return Fraction(x)


class Exponent:
    """Grid point (alpha, k) for the monomial x^alpha * L^k, lex-ordered."""

    __slots__ = ("alpha", "k", "_hash")

    def __init__(self, alpha, k: int):
        object.__setattr__(self, "alpha", _rat(alpha))
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "_hash", hash((self.alpha, self.k)))

    def __setattr__(self, *a):
        raise AttributeError("Exponent is immutable")

    @property
    def in_L(self) -> bool:
        """True when the monomial belongs to the main class (alpha > 0)."""
        return self.alpha > 0

    @staticmethod
    def _make(alpha: Fraction, k: int) -> "Exponent":
        e = object.__new__(Exponent)
        object.__setattr__(e, "alpha", alpha)
        object.__setattr__(e, "k", k)
        object.__setattr__(e, "_hash", hash((alpha, k)))
        return e

    def __add__(self, other: "Exponent") -> "Exponent":
        return Exponent._make(self.alpha + other.alpha, self.k + other.k)

    def __sub__(self, other: "Exponent") -> "Exponent":
        return Exponent._make(self.alpha - other.alpha, self.k - other.k)

    def __eq__(self, other):
        if not isinstance(other, Exponent):
            return NotImplemented
        return self.alpha == other.alpha and self.k == other.k

    def __lt__(self, other):
        return (self.alpha, self.k) < (other.alpha, other.k)

    def __le__(self, other):
        return (self.alpha, self.k) <= (other.alpha, other.k)

    def __gt__(self, other):
        return (self.alpha, self.k) > (other.alpha, other.k)

    def __ge__(self, other):
        return (self.alpha, self.k) >= (other.alpha, other.k)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Exponent({self.alpha!r}, {self.k})"

    def __str__(self) -> str:
        return f"x^{self.alpha} L^{self.k}"


EXP_ZERO = Exponent(Fraction(0), 0)
EXP_X = Exponent(Fraction(1), 0)


def lex_cmp(e1: Exponent, e2: Exponent) -> int:
    """Three-way lexicographic comparison: -1, 0 or +1."""
    if (e1.alpha, e1.k) < (e2.alpha, e2.k):
        return -1
    if (e1.alpha, e1.k) > (e2.alpha, e2.k):
        return 1
    return 0


@dataclass(frozen=True)
class Region:
    """Exactness claim {(alpha, k) : 0 < alpha <= alpha_max, k <= boundary(alpha)}.

    The public, serialized form is the rectangle with boundary k_max
    (rho = 0).  Internally a claim may carry a slope rho >= 0, widening the
    boundary to k_max + rho*(alpha_max - alpha): supports of power-log
    series live in cones k >= sigma - rho*alpha, and sloped bands are stable
    under multiplication by cone-respecting series, which keeps long
    operation pipelines from shedding k-range.  For ambient series the
    alpha > 0 constraint on membership is dropped.
    """

    alpha_max: Fraction
    k_max: int
    rho: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "alpha_max", _rat(self.alpha_max))
        object.__setattr__(self, "k_max", int(self.k_max))
        object.__setattr__(self, "rho", _rat(self.rho))
        if self.rho < 0:
            raise ValueError("region slope must be >= 0")
        # corner = boundary value extrapolated to alpha = 0
        object.__setattr__(self, "_corner", self.k_max + self.rho * self.alpha_max)

    def boundary(self, alpha: Fraction) -> Fraction:
        return self.k_max + self.rho * (self.alpha_max - alpha)

    def contains(self, e: Exponent, ambient: bool = False) -> bool:
        if e.alpha > self.alpha_max:
            return False
        if self.rho:
            if e.k + self.rho * e.alpha > self._corner:
                return False
        elif e.k > self.k_max:
            return False
        return ambient or e.alpha > 0

    def intersect(self, other: "Region | None") -> "Region":
        if other is None:
            return self
        a = min(self.alpha_max, other.alpha_max)
        rho = min(self.rho, other.rho)
        # value of both boundaries at alpha = a, then cap the alpha -> 0 end
        k = min(_floor(self.boundary(a)), _floor(other.boundary(a)))
        k = min(
            k,
            _floor(self.boundary(0) - rho * a),
            _floor(other.boundary(0) - rho * a),
        )
        return Region(a, k, rho)

    def covers(self, other: "Region") -> bool:
        if self.alpha_max < other.alpha_max:
            return False
        return (
            self.boundary(other.alpha_max) >= other.boundary(other.alpha_max)
            and self.boundary(0) >= other.boundary(0)
        )

    def is_empty(self) -> bool:
        """No positive-alpha exponent fits (ambient claims are never empty)."""
        return self.alpha_max <= 0

    def to_json(self) -> dict:
        out = {"alpha_max": str(self.alpha_max), "k_max": self.k_max}
        if self.rho:
            out["rho"] = str(self.rho)
        return out

    @staticmethod
    def from_json(obj: dict) -> "Region":
        return Region(Fraction(obj["alpha_max"]), int(obj["k_max"]), Fraction(obj.get("rho", 0)))

    def __str__(self) -> str:
        slope = f", rho={self.rho}" if self.rho else ""
        return f"(alpha_max={self.alpha_max}, k_max={self.k_max}{slope})"


def _floor(x) -> int:
    from math import floor

    return int(floor(x))


def intersect_regions(a: Region | None, b: Region | None) -> Region | None:
    if a is None:
        return b
    return a.intersect(b)


@dataclass(frozen=True)
class SupportMeta:
    """Support summary used by region propagation.

    mu is a lower bound for the alpha-component of every exponent of the
    *represented* series (not just the stored terms); kmin is the smallest
    k among exponents with alpha <= alpha_max, and per_alpha_kmin records the
    smallest stored k for each stored alpha.  mu = None encodes the zero
    series (vacuous bound).
    """

    mu: Fraction | None
    kmin: int | None
    per_alpha_kmin: dict


def decompositions(
    target: Exponent,
    supp_a: Iterable[Exponent],
    supp_b: Iterable[Exponent],
) -> list[tuple[Exponent, Exponent]]:
    """All pairs (e1, e2) in supp_a x supp_b with e1 + e2 == target.

    Finite by construction since the supports are finite sets; with alpha > 0
    throughout this is the finiteness that makes every convolution
    coefficient a finite sum.
    """
    by_exp = set(supp_b)
    out = []
    for e1 in sorted(set(supp_a)):
        e2 = target - e1
        if e2 in by_exp:
            out.append((e1, e2))
    return out


def semigroup_elements_up_to(generators: list[Exponent], bound) -> list[Exponent]:
    """Elements of the additive semigroup with alpha-component <= bound.

    Every generator must have alpha > 0, which caps the number of summands
    at bound/min(alpha) and keeps the closure finite.
    """
    bound = _rat(bound)
    gens = sorted(set(generators))
    for g in gens:
        if g.alpha <= 0:
            raise DomainError(f"semigroup generator {g} must have alpha > 0")
    if not gens or bound <= 0:
        return []
    found: set[Exponent] = set()
    frontier = [g for g in gens if g.alpha <= bound]
    while frontier:
        nxt = []
        for e in frontier:
            if e in found:
                continue
            found.add(e)
            for g in gens:
                s = e + g
                if s.alpha <= bound and s not in found:
                    nxt.append(s)
        frontier = nxt
    return sorted(found)
