"""Shared test fixtures: series builders and seeded random generators."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from powerlog import Context, Region
from powerlog.cli import parse_series
from powerlog.grid import Exponent
from powerlog.series import Transseries, from_terms


def S(text: str, ambient: bool = False) -> Transseries:
    """Entire series from surface syntax."""
    return parse_series(text, ambient=ambient)


def F(*args) -> Fraction:
    return Fraction(*args)


def rand_coef(rng: random.Random, lo=-4, hi=4, den=3) -> Fraction:
    c = Fraction(0)
    while c == 0:
        c = Fraction(rng.randint(lo, hi), rng.randint(1, den))
    return c


ALPHAS = [Fraction(1), Fraction(3, 2), Fraction(2), Fraction(5, 2), Fraction(3), Fraction(4)]
KS = [-1, 0, 1, 2]


def rand_tail(rng: random.Random, lead: tuple, n: int, alphas=None, ks=None) -> dict:
    """n random terms strictly beyond the lead exponent."""
    alphas = alphas or ALPHAS
    ks = ks or KS
    out = {}
    tries = 0
    while len(out) < n and tries < 200:
        tries += 1
        e = (rng.choice(alphas), rng.choice(ks))
        if e > lead and e not in out:
            out[e] = rand_coef(rng)
    return out


def rand_parabolic(rng: random.Random, nterms: int = 5) -> Transseries:
    """x + a x^alpha L^k + tail, with (alpha, k) succ (1, 0)."""
    while True:
        lead = (rng.choice(ALPHAS), rng.choice([0, 1, 2]))
        if lead > (Fraction(1), 0):
            break
    terms = {(Fraction(1), 0): Fraction(1), lead: rand_coef(rng)}
    terms.update(rand_tail(rng, lead, nterms - 2))
    return from_terms(terms)


def rand_hyperbolic(rng: random.Random, nterms: int = 4) -> Transseries:
    lam = rng.choice([Fraction(1, 2), Fraction(3, 4), Fraction(2), Fraction(3)])
    terms = {(Fraction(1), 0): lam}
    terms.update(rand_tail(rng, (Fraction(1), 0), nterms - 1, ks=[0, 1, 2]))
    return from_terms(terms)


def rand_strongly_hyperbolic(rng: random.Random, nterms: int = 4) -> Transseries:
    """Leading lam x^alpha with alpha != 1 and lam = q^(alpha-1), so the
    normalizing rescale constant stays rational.  When lam != 1 the rescale
    of an L-carrying term needs log(lam), so such tails are kept log-free
    to stay within exact mode."""
    alpha = rng.choice([Fraction(2), Fraction(3)])
    q = Fraction(rng.randint(1, 3), rng.randint(1, 2))
    lam = q ** (int(alpha) - 1)
    ks = [0] if lam != 1 else [0, 1]
    terms = {(alpha, 0): lam}
    terms.update(
        rand_tail(rng, (alpha, 0), nterms - 1, alphas=[alpha + 1, alpha + 2, 2 * alpha], ks=ks)
    )
    return from_terms(terms)


def rand_field_parabolic(rng: random.Random, nterms: int = 4) -> Transseries:
    """Field coefficient with ord succ (1, 0) and nonnegative k's."""
    while True:
        lead = (rng.choice(ALPHAS), rng.choice([0, 1]))
        if lead > (Fraction(1), 0):
            break
    terms = {lead: rand_coef(rng)}
    terms.update(rand_tail(rng, lead, nterms - 1, ks=[0, 1, 2]))
    return from_terms(terms)


def rand_field_hyperbolic(rng: random.Random, nterms: int = 3) -> Transseries:
    lam = 0.0
    while abs(lam) < 0.1:
        lam = rng.uniform(-0.8, 0.8)
    terms = {(Fraction(1), 0): lam}
    for e, c in rand_tail(rng, (Fraction(1), 0), nterms - 1, ks=[0, 1, 2]).items():
        terms[e] = float(c)
    return from_terms(terms)


def rand_lseries(rng: random.Random, nterms: int = 6, ks=None) -> Transseries:
    terms = {}
    while len(terms) < nterms:
        e = (rng.choice(ALPHAS), rng.choice(ks or KS))
        if e not in terms:
            terms[e] = rand_coef(rng)
    return from_terms(terms)


@pytest.fixture
def rng():
    return random.Random(20260810)
