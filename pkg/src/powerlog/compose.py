"""Composition, compositional inversion, differentiation, Lie brackets.

Composition g o f is done by monomial substitution, never by Taylor
expansion around x.  Write f = a x^l0 (1 + eps) with ord(eps) succ (0,0).
For a monomial x^alpha L^k (L = -1/log x):

* x^alpha o f = a^alpha x^(l0*alpha) sum_j C(alpha,j) eps^j,
* L o f = -1/log f.  From log f = log a - l0/L + log(1+eps) one gets

      L o f = (L/l0) * (1 - (L/l0) * W)^(-1),   W = log a + log(1+eps),

  expanded as a geometric series in (L/l0)*W, whose order is at least (0,1);
  L^k o f is the k-th power of that (multiplicative inverse for k < 0).

Every sum above is grid-finite per retained monomial, so the substitution is
exact on regions for parabolic, hyperbolic and strongly hyperbolic f alike.
The expansions of a fixed inner series are cached in a _ComposeEngine and
shared across left factors; inversion iterates left factors against a fixed
inner series, which makes each round cheap.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor

from .context import Context, clog, cpow
from .errors import DomainError, NeedsFloatMode, NotLH
from .grid import EXP_ZERO, Exponent, Region
from .series import (
    Classification,
    Transseries,
    _fast_series,
    _PowerCache,
    add,
    binom_series,
    classify,
    clip,
    cone_penalty,
    NO_CLAIM,
    geometric_inverse,
    geometric_series,
    identity,
    leading,
    log1p_series,
    monomial,
    mul,
    scalar_mul,
    shift,
    sub,
    unit,
    zero,
)


def derivative(f: Transseries) -> Transseries:
    """Termwise d/dx: (x^a L^k)' = a x^(a-1) L^k + k x^(a-1) L^(k+1).

    The claim keeps its k-boundary: a derivative coefficient at (b, r) only
    involves the coefficients of f at (b+1, r) and (b+1, r-1), both inside
    f's claim whenever b+1 <= alpha_max; the k+1 shift in the rule pushes
    terms upward in k, never into the retained band.
    """
    terms: dict[Exponent, object] = {}
    for e, c in f._terms.items():
        if e.alpha != 0:
            ea = Exponent(e.alpha - 1, e.k)
            terms[ea] = terms.get(ea, 0) + c * e.alpha
        if e.k != 0:
            ek = Exponent(e.alpha - 1, e.k + 1)
            terms[ek] = terms.get(ek, 0) + c * e.k
    region = None
    if f.region is not None:
        region = Region(f.region.alpha_max - 1, f.region.k_max, f.region.rho)
        terms = {e: c for e, c in terms.items() if region.contains(e, ambient=True)}
    mu = None if f.mu is None else f.mu - 1
    return Transseries(terms, region, True, mu=mu)


class _EllCache:
    """Powers (L o f)^k for the k's that occur in left factors."""

    def __init__(self, l0: Fraction, a, eps: Transseries, ctx: Context):
        self.ctx = ctx
        inv_l0 = Fraction(1) / l0
        w = log1p_series(eps, ctx)
        la = clog(a, ctx)
        if la != 0:
            w = add(w, scalar_mul(la, unit()))
        v = shift(w, 0, 1, inv_l0)  # (L/l0) * W, order at least (0,1)
        g = geometric_series(v, ctx)
        self.base = shift(g, 0, 1, inv_l0)  # L o f
        self._pows: dict[int, Transseries] = {0: clip(unit(), ctx.region)}
        self._neg_base: Transseries | None = None

    def power(self, k: int) -> Transseries:
        if k in self._pows:
            return self._pows[k]
        if k > 0:
            prev = self.power(k - 1)
            self._pows[k] = clip(mul(prev, self.base), self.ctx.region)
        else:
            if self._neg_base is None:
                if self.base.is_zero():
                    # claim already collapsed: nothing certified about 1/(L o f)
                    reg = self.ctx.region
                    self._neg_base = Transseries(
                        {}, Region(reg.alpha_max, NO_CLAIM, reg.rho), True, mu=None
                    )
                else:
                    self._neg_base = geometric_inverse(self.base, self.ctx)
            prev = self.power(k + 1)
            self._pows[k] = clip(mul(prev, self._neg_base), self.ctx.region)
        return self._pows[k]


class _ComposeEngine:
    """Shared substitution data for a fixed inner series f."""

    def __init__(self, f: Transseries, ctx: Context):
        cls = classify(f)
        if cls is Classification.NOT_IN_LH:
            raise NotLH("composition base must have a log-free positive leading term")
        self.f = f
        self.ctx = ctx
        e0, self.a = leading(f)
        self.l0 = e0.alpha
        inv_a = (Fraction(1) / Fraction(self.a)) if not isinstance(self.a, float) else 1.0 / self.a
        self.eps = sub(shift(f, -e0.alpha, 0, inv_a), unit())
        reg = ctx.region
        pen = cone_penalty(self.eps, reg.rho, reg.alpha_max)
        self.drop = pen if pen is not None else -NO_CLAIM
        self.band_ctx = ctx.with_region(
            Region(reg.alpha_max, reg.k_max + (pen if pen is not None else 0), reg.rho)
        )
        self.eps_cache = _PowerCache(self.eps, self.band_ctx) if not self.eps.is_zero() else None
        self.ell: _EllCache | None = None
        self._apows: dict[Fraction, object] = {}
        self._bodies: dict[Fraction, Transseries] = {}

    def a_pow(self, alpha: Fraction):
        if alpha not in self._apows:
            self._apows[alpha] = cpow(self.a, alpha, self.ctx)
        return self._apows[alpha]

    def body(self, alpha: Fraction) -> Transseries:
        """(1 + eps)^alpha on the working band."""
        if alpha not in self._bodies:
            if self.eps_cache is None:
                self._bodies[alpha] = clip(unit(), self.band_ctx.region)
            else:
                self._bodies[alpha] = binom_series(self.eps, alpha, self.band_ctx, self.eps_cache)
        return self._bodies[alpha]

    def ell_power(self, k: int) -> Transseries:
        if self.ell is None:
            self.ell = _EllCache(self.l0, self.a, self.eps, self.band_ctx)
        return self.ell.power(k)

    def apply(self, g: Transseries) -> Transseries:
        if g.is_zero() and g.entire:
            return zero(g.ambient)
        acc: dict[Exponent, object] = {}
        piece_region: Region | None = None
        for e, c in g.terms:
            body = self.body(e.alpha)
            if e.k != 0:
                body = clip(mul(body, self.ell_power(e.k)), self.band_ctx.region)
            scale = c * self.a_pow(e.alpha)
            da = self.l0 * e.alpha
            preg = body.region
            if preg is not None:
                preg = Region(preg.alpha_max + da, preg.k_max, preg.rho)
            piece_region = preg if piece_region is None else piece_region.intersect(preg)
            for be, bc in body._terms.items():
                oe = Exponent._make(be.alpha + da, be.k)
                if oe in acc:
                    acc[oe] += bc * scale
                else:
                    acc[oe] = bc * scale
        region = self._tail_region(g, piece_region)
        mu = None if g.mu is None else self.l0 * g.mu
        ambient = g.ambient or any(e.alpha <= 0 for e in acc)
        kept = {e: c for e, c in acc.items() if c != 0 and region.contains(e, ambient=True)}
        return _fast_series(kept, region, ambient, mu)

    def _tail_region(self, g: Transseries, piece_region: Region | None) -> Region:
        """Pieces' claims intersected with the g-tail bound.

        An unknown g-exponent (alpha, k) above g's boundary contributes at
        (l0*alpha + da, k + dk) with dk + rho*da >= -drop (cone bound on the
        substitution increments), so its images stay above a sloped line;
        unknown g-exponents beyond alpha_max(g) stay beyond l0*alpha_max(g).
        """
        region = self.ctx.region
        if piece_region is not None:
            region = region.intersect(piece_region)
        if g.region is not None:
            rg = g.region
            rho = region.rho
            a_out = min(region.alpha_max, self.l0 * rg.alpha_max)
            lo = min(g.mu if g.mu is not None else Fraction(0), Fraction(0))
            slope = rho * self.l0 - rg.rho
            delta = min(slope * lo, slope * rg.alpha_max)
            k_out = int(floor(rg.k_max + rg.rho * rg.alpha_max - self.drop + delta - rho * a_out))
            region = region.intersect(Region(a_out, k_out, rho))
        return region


def compose(g: Transseries, f: Transseries, ctx: Context) -> Transseries:
    """Right composition g o f for f with a log-free positive leading term."""
    return _ComposeEngine(f, ctx).apply(g)


def invert(f: Transseries, ctx: Context) -> Transseries:
    """Compositional inverse by order-by-order cancellation.

    Maintains h with h o f = id + D against a fixed substitution engine for
    f; the leading term d x^gamma L^r of D is removed by the correction
    -d l0^r a^(-gamma/l0) x^(gamma/l0) L^r, the exact leading response of
    h o f to a perturbation of h.  The discrepancy order strictly increases,
    so the loop is finite on the grid, and the claim is certified by the
    final composition.  When the correction constants are irrational in
    exact mode the iteration falls back to solving f o g = id, whose
    response constant a l0 b^(l0-1) is rational whenever the leading
    inversion constant b = a^(-1/l0) is.
    """
    cls = classify(f)
    if cls is Classification.NOT_IN_LH:
        raise NotLH("compositional inverse needs a log-free positive leading term")
    try:
        return _invert_left(f, ctx)
    except NeedsFloatMode:
        return _invert_right(f, ctx)


def _invert_left(f: Transseries, ctx: Context) -> Transseries:
    e0, a = leading(f)
    l0 = e0.alpha
    engine = _ComposeEngine(f, ctx)
    b = cpow(a, Fraction(-1) / l0, ctx)
    h = monomial(Fraction(1) / l0, 0, b)
    # substitution is linear in the left factor: maintain D = h o f - id
    # incrementally, one monomial image per correction
    disc = sub(engine.apply(h), identity())
    guard = None
    for _ in range(4096):
        d = _significant(disc, ctx)
        if d.is_zero():
            break
        ed, cd = leading(d)
        if guard is not None and not guard < ed:
            raise DomainError("compositional inverse failed to make progress")
        guard = ed
        u = ed.alpha / l0
        e = -cd * l0**ed.k / engine.a_pow(u)
        corr = monomial(u, ed.k, e)
        h = add(h, corr)
        disc = add(disc, engine.apply(corr))
    else:
        raise DomainError("compositional inverse iteration cap exceeded")
    if ctx.exact and not disc.is_zero():
        raise DomainError("compositional inverse verification failed")
    return clip(h, disc.region)


def _invert_right(f: Transseries, ctx: Context) -> Transseries:
    e0, a = leading(f)
    l0 = e0.alpha
    b = cpow(a, Fraction(-1) / l0, ctx)
    factor = a * l0 * cpow(b, l0 - 1, ctx)  # leading coefficient of f' o g
    g = monomial(Fraction(1) / l0, 0, b)
    guard = None
    for _ in range(4096):
        d = _significant(sub(compose(f, g, ctx), identity()), ctx)
        if d.is_zero():
            break
        ed, cd = leading(d)
        if guard is not None and not guard < ed:
            raise DomainError("compositional inverse failed to make progress")
        guard = ed
        corr = monomial(ed.alpha - 1 + Fraction(1) / l0, ed.k, -cd / factor)
        g = add(g, corr)
    else:
        raise DomainError("compositional inverse iteration cap exceeded")
    check = sub(compose(f, g, ctx), identity())
    if ctx.exact and not check.is_zero():
        raise DomainError("compositional inverse verification failed")
    return clip(g, check.region)


def _significant(f: Transseries, ctx: Context) -> Transseries:
    """Drop float-mode coefficients at or below the noise tolerance."""
    if ctx.exact:
        return f
    kept = {e: c for e, c in f._terms.items() if abs(c) > ctx.tol}
    return Transseries(kept, f.region, f.ambient, mu=f.mu)


def lie_bracket(eta: Transseries, eps: Transseries) -> Transseries:
    """{eta, eps} = eta * eps' - eta' * eps (bilinear, antisymmetric)."""
    return sub(mul(eta, derivative(eps)), mul(derivative(eta), eps))
