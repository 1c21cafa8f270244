"""Truncated power-log transseries with exactness-region tracking.

A :class:`Transseries` stores finitely many coefficients on the exponent grid
together with a :class:`~powerlog.grid.Region` describing where those
coefficients are guaranteed to equal the represented series.  ``region=None``
means the stored finite sum *is* the whole series (exact everywhere); that is
the case for parsed literals and stays true under + and *.

Claim propagation (the soundness contract, enforced by the enlarged-region
oracle tests) rests on two derived bounds about the *represented* series, not
just the stored terms:

* ``mu``: a tracked lower bound for the alpha-components of the support;
* ``sigma_low(f, rho, budget)``: a lower bound for k + rho*alpha over
  support elements with alpha <= budget, computed from the stored terms plus
  the region boundary (anything unknown hides above the boundary).

For a product h = f*g, a coefficient of h at (gamma, r) only involves
factor exponents with alpha <= gamma - mu(other side), so

    alpha_max(h) = min(alpha_max(f) + mu(g), alpha_max(g) + mu(f))

and an unknown tail of f above its boundary K_f + rho_f*(A_f - alpha) can
only reach k-levels above K_f + rho_f*A_f + sigma_low(g) - rho_f*gamma,
giving the sloped boundary of the product claim.  Working claims carry a
slope rho > 0 precisely because supports live in cones k >= sigma -
rho*alpha: sloped bands are stable under multiplication, so long pipelines
(conjugations, Lie series) do not shed k-range.

Coefficients are Fractions (exact mode) or floats (float mode), never mixed
inside one series.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from math import floor, gcd
from typing import Iterable, Iterator

from .context import Context, binomial
from .errors import DomainError, EmptyRegion, NotLH, ZeroSeries
from .grid import EXP_ZERO, EXP_X, Exponent, Region, SupportMeta, intersect_regions

_UNSET = object()


def _min_opt(*vals):
    """min with None treated as +infinity; None when all are None."""
    best = None
    for v in vals:
        if v is None:
            continue
        if best is None or v < best:
            best = v
    return best


class Classification(enum.Enum):
    PARABOLIC = "Parabolic"
    HYPERBOLIC_CONTRACTION = "HyperbolicContraction"
    HYPERBOLIC_EXPANSION = "HyperbolicExpansion"
    STRONGLY_HYPERBOLIC = "StronglyHyperbolic"
    NOT_IN_LH = "NotInLH"


class Transseries:
    """Immutable truncated series sum_{(alpha,k)} c x^alpha L^k."""

    __slots__ = ("_terms", "region", "ambient", "mu", "_sigma_cache")

    def __init__(self, terms, region: Region | None = None, ambient: bool = False, mu=_UNSET):
        clean: dict[Exponent, object] = {}
        has_float = False
        for e, c in (terms.items() if isinstance(terms, dict) else terms):
            if not isinstance(e, Exponent):
                e = Exponent(Fraction(e[0]), int(e[1]))
            if isinstance(c, float):
                has_float = True
            if c == 0:
                continue
            if region is not None and not region.contains(e, ambient=True):
                raise ValueError(f"stored exponent {e} outside region {region}")
            if not ambient and e.alpha <= 0:
                raise ValueError(f"exponent {e} has alpha <= 0 in a non-ambient series")
            clean[e] = clean.get(e, 0) + c
        if has_float:
            clean = {e: float(c) for e, c in clean.items() if float(c) != 0.0}
        else:
            clean = {e: c for e, c in clean.items() if c != 0}
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "ambient", bool(ambient))
        if mu is _UNSET:
            if region is not None:
                raise ValueError("mu is required for a truncated series")
            mu = min((e.alpha for e in clean), default=None)
        object.__setattr__(self, "mu", mu)

    def __setattr__(self, *a):  # values are shared freely across threads
        raise AttributeError("Transseries is immutable")

    # -- basic accessors -------------------------------------------------

    @property
    def terms(self) -> tuple[tuple[Exponent, object], ...]:
        return tuple(sorted(self._terms.items()))

    @property
    def entire(self) -> bool:
        return self.region is None

    def coeff(self, e: Exponent):
        return self._terms.get(e, 0)

    def support(self) -> list[Exponent]:
        return sorted(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_float(self) -> bool:
        return any(isinstance(c, float) for c in self._terms.values())

    @property
    def meta(self) -> SupportMeta:
        per_alpha: dict[Fraction, int] = {}
        for e in self._terms:
            cur = per_alpha.get(e.alpha)
            per_alpha[e.alpha] = e.k if cur is None else min(cur, e.k)
        kmin = None
        if self._terms:
            kmin = min(e.k for e in self._terms)
        elif self.region is not None:
            kmin = self.region.k_max + 1
        return SupportMeta(mu=self.mu, kmin=kmin, per_alpha_kmin=per_alpha)

    def __eq__(self, other):
        if not isinstance(other, Transseries):
            return NotImplemented
        return (
            self._terms == other._terms
            and self.region == other.region
            and self.ambient == other.ambient
        )

    def __hash__(self):
        return hash((tuple(sorted(self._terms.items())), self.region, self.ambient))

    def __repr__(self):
        return f"Transseries({to_text(self)!r}, region={self.region}, ambient={self.ambient})"

    def __iter__(self) -> Iterator[tuple[Exponent, object]]:
        return iter(self.terms)


# -- constructors --------------------------------------------------------


def from_terms(pairs, ambient: bool = False) -> Transseries:
    """Entire series from (exponent, coefficient) pairs; exact everywhere."""
    return Transseries(
        {Exponent(Fraction(a), int(k)): c for (a, k), c in dict(pairs).items()},
        region=None,
        ambient=ambient,
    )


def zero(ambient: bool = False) -> Transseries:
    return Transseries({}, None, ambient)


def unit() -> Transseries:
    return Transseries({EXP_ZERO: Fraction(1)}, None, True)


def identity() -> Transseries:
    return Transseries({EXP_X: Fraction(1)}, None, False)


def monomial(alpha, k: int, coef=Fraction(1), ambient: bool | None = None) -> Transseries:
    alpha = Fraction(alpha)
    if ambient is None:
        ambient = alpha <= 0
    return Transseries({Exponent(alpha, k): coef}, None, ambient)


# -- support bounds used by claim propagation ------------------------------


def sigma_low(f: Transseries, rho: Fraction, budget: Fraction):
    """Lower bound for k + rho*alpha over support elements with alpha <= budget.

    None means no such element exists.  For a truncated series the bound
    combines the stored terms with the region boundary: an unknown element
    with alpha <= alpha_max sits strictly above the boundary, and the bound
    is only valid for budget <= alpha_max (beyond that nothing is known).
    """
    try:
        cache = f._sigma_cache
    except AttributeError:
        cache = {}
        object.__setattr__(f, "_sigma_cache", cache)
    key = (rho, budget)
    if key in cache:
        return cache[key]
    out = _sigma_low_raw(f, rho, budget)
    cache[key] = out
    return out


def _sigma_low_raw(f: Transseries, rho: Fraction, budget: Fraction):
    rho = Fraction(rho)
    vals = [e.k + rho * e.alpha for e in f._terms if e.alpha <= budget]
    if f.region is None:
        return _min_opt(*vals)
    reg = f.region
    if budget > reg.alpha_max:
        raise DomainError("sigma_low budget exceeds the claimed region")
    # unknown elements: k > k_max + rho0*(A - alpha), alpha in [lo, budget]
    lo = min(f.mu if f.mu is not None else Fraction(0), Fraction(0))
    slope = reg.rho - rho
    worst_alpha = budget if slope >= 0 else lo
    vals.append(reg.k_max + reg.rho * reg.alpha_max - slope * worst_alpha)
    return _min_opt(*vals)


def pipeline_rho(*fs: Transseries) -> Fraction:
    """Slope making the stored supports (and their conjugation increments
    (alpha - 1, k)) cone-positive: k >= -rho*alpha throughout."""
    r = Fraction(0)
    for f in fs:
        for e in f._terms:
            if e.k < 0:
                if e.alpha > 0:
                    r = max(r, Fraction(-e.k) / e.alpha)
                if e.alpha > 1:
                    r = max(r, Fraction(-e.k) / (e.alpha - 1))
    return r


NO_CLAIM = -(2**30)  # k-level meaning "nothing certified in the k direction"


def cone_penalty(u: Transseries, rho: Fraction, budget: Fraction) -> int | None:
    """Max total descent below the rho-cone achievable by sums of u-exponents
    with alpha-total <= budget.

    Only stored exponents can dip below the cone: unknown tail exponents sit
    above the region boundary, hence above the cone whenever the boundary
    corner k_max + rho*alpha_max is >= 0.  Each dip of depth
    -(k + rho*alpha) costs alpha > 0, so the budget caps the total.  When
    the corner itself is negative, tails of arbitrarily small alpha could
    dip, so no finite bound exists (None).
    """
    rho = Fraction(rho)
    ratio = Fraction(0)
    for e in u._terms:
        depth = -(e.k + rho * e.alpha)
        if depth > 0:
            if e.alpha <= 0:
                raise DomainError("exponent at or below (0,0) in a power-sum base")
            ratio = max(ratio, depth / e.alpha)
    if u.region is not None and u.region.k_max + u.region.rho * u.region.alpha_max < 0:
        return None
    return int(floor(budget * ratio)) if ratio > 0 else 0


# -- small structural helpers -------------------------------------------


def clip(f: Transseries, region: Region | None) -> Transseries:
    """Restrict the claim to ``region`` (terms outside are dropped)."""
    if region is None:
        return f
    new_region = intersect_regions(f.region, region)
    kept = {e: c for e, c in f._terms.items() if new_region.contains(e, ambient=True)}
    return Transseries(kept, new_region, f.ambient, mu=f.mu)


def shift(f: Transseries, dalpha, dk: int, scale=Fraction(1)) -> Transseries:
    """Multiply by scale * x^dalpha * L^dk (exact monomial shift)."""
    dalpha = Fraction(dalpha)
    d = Exponent(dalpha, dk)
    terms = {e + d: c * scale for e, c in f._terms.items()}
    region = None
    if f.region is not None:
        region = Region(f.region.alpha_max + dalpha, f.region.k_max + dk, f.region.rho)
    mu = None if f.mu is None else f.mu + dalpha
    ambient = f.ambient or any(e.alpha <= 0 for e in terms)
    return Transseries(terms, region, ambient, mu=mu)


def to_float(f: Transseries) -> Transseries:
    return Transseries(
        {e: float(c) for e, c in f._terms.items()}, f.region, f.ambient, mu=f.mu
    )


def to_mode(f: Transseries, ctx: Context) -> Transseries:
    return to_float(f) if not ctx.exact else f


# -- ring operations ------------------------------------------------------


def add(f: Transseries, g: Transseries) -> Transseries:
    region = intersect_regions(f.region, g.region)
    terms = dict(f._terms)
    for e, c in g._terms.items():
        terms[e] = terms.get(e, 0) + c
    out = Transseries(terms, None, f.ambient or g.ambient, mu=_min_opt(f.mu, g.mu))
    return clip(out, region) if region is not None else out


def scalar_mul(c, f: Transseries) -> Transseries:
    if c == 0:
        return Transseries({}, f.region, f.ambient, mu=f.mu)
    return Transseries({e: c * v for e, v in f._terms.items()}, f.region, f.ambient, mu=f.mu)


def sub(f: Transseries, g: Transseries) -> Transseries:
    return add(f, scalar_mul(-1, g))


def _mul_region(f: Transseries, g: Transseries) -> Region | None:
    if (f.is_zero() and f.entire) or (g.is_zero() and g.entire):
        return None  # exact zero everywhere
    if f.region is None and g.region is None:
        return None
    sides = [(a, b) for a, b in ((f, g), (g, f)) if a.region is not None]
    a_out = _min_opt(
        *(
            a.region.alpha_max + (b.mu if b.mu is not None else Fraction(0))
            for a, b in sides
        )
    )
    rho_out = min(a.region.rho for a, _ in sides)
    k_levels = []
    for a, b in sides:
        reg = a.region
        # the b-factor paired against an a-tail has alpha <= a_out - min(mu_a, 0),
        # which never exceeds alpha_max(b) when b is truncated
        need = a_out - min(a.mu if a.mu is not None else Fraction(0), Fraction(0))
        budget = min(need, b.region.alpha_max) if b.region is not None else need
        sig = sigma_low(b, reg.rho, budget)
        if sig is None:
            continue  # b has no support there: this tail channel is empty
        k_levels.append(reg.k_max + sig + reg.rho * (reg.alpha_max - a_out))
    if not k_levels:
        # tail channels empty (zero factors); keep the tighter base claims
        return intersect_regions(f.region, g.region)
    k_out = int(floor(min(k_levels)))
    return Region(a_out, k_out, rho_out)


def mul(f: Transseries, g: Transseries) -> Transseries:
    """Convolution product; every coefficient inside the propagated claim is
    a finite sum of products of in-claim coefficients of the factors."""
    region = _mul_region(f, g)
    ambient = f.ambient or g.ambient
    if region is not None and not ambient and region.is_empty():
        raise EmptyRegion(f"product region {region} contains no exponent with alpha > 0")
    # scale alphas to a common denominator: the hot loop runs on ints
    den = 1
    for e in f._terms:
        den = den * e.alpha.denominator // gcd(den, e.alpha.denominator)
    for e in g._terms:
        den = den * e.alpha.denominator // gcd(den, e.alpha.denominator)
    fi = [(int(e.alpha * den), e.k, c) for e, c in f._terms.items()]
    gi = [(int(e.alpha * den), e.k, c) for e, c in g._terms.items()]
    acc: dict[tuple, object] = {}
    if region is None:
        for a1, k1, c1 in fi:
            for a2, k2, c2 in gi:
                key = (a1 + a2, k1 + k2)
                if key in acc:
                    acc[key] += c1 * c2
                else:
                    acc[key] = c1 * c2
    else:
        # membership alpha <= amax and k + rho*alpha <= corner, scaled to ints:
        #   a <= amax*den ; k*K_COEF + a*A_COEF <= RHS
        amax_s = int(floor(region.alpha_max * den))
        rho = region.rho
        if rho:
            rn, rd = rho.numerator, rho.denominator
            cn, cd = region._corner.numerator, region._corner.denominator
            a_coef = rn * cd
            k_coef = rd * den * cd
            rhs = cn * rd * den
        else:
            kmax = region.k_max
        for a1, k1, c1 in fi:
            for a2, k2, c2 in gi:
                a = a1 + a2
                if a > amax_s:
                    continue
                k = k1 + k2
                if (k * k_coef + a * a_coef > rhs) if rho else (k > kmax):
                    continue
                key = (a, k)
                if key in acc:
                    acc[key] += c1 * c2
                else:
                    acc[key] = c1 * c2
    terms = {
        Exponent._make(Fraction(a, den), k): c for (a, k), c in acc.items() if c != 0
    }
    mu = None if (f.mu is None or g.mu is None) else f.mu + g.mu
    return _fast_series(terms, region, ambient, mu)


def _fast_series(terms: dict, region, ambient, mu) -> Transseries:
    """Internal constructor for pre-validated term dicts (zero-pruned,
    in-region, mode-consistent)."""
    out = object.__new__(Transseries)
    object.__setattr__(out, "_terms", terms)
    object.__setattr__(out, "region", region)
    object.__setattr__(out, "ambient", ambient)
    object.__setattr__(out, "mu", mu)
    return out


# -- leading data and classification --------------------------------------


def leading(f: Transseries) -> tuple[Exponent, object]:
    """Lex-smallest stored exponent with its coefficient (order, Lc)."""
    if not f._terms:
        raise ZeroSeries("leading term of a zero series")
    e = min(f._terms)
    return e, f._terms[e]


def classify(f: Transseries) -> Classification:
    e, c = leading(f)
    if e.k != 0 or e.alpha <= 0 or not c > 0:
        return Classification.NOT_IN_LH
    if e.alpha == 1:
        if c == 1:
            return Classification.PARABOLIC
        return (
            Classification.HYPERBOLIC_CONTRACTION
            if c < 1
            else Classification.HYPERBOLIC_EXPANSION
        )
    return Classification.STRONGLY_HYPERBOLIC


def require_lh(f: Transseries) -> Classification:
    cls = classify(f)
    if cls is Classification.NOT_IN_LH:
        raise NotLH("series has a logarithm or a nonpositive coefficient in its leading term")
    return cls


# -- power sums: sum_j c_j u^j for ord(u) succ (0,0) ----------------------


class _PowerCache:
    """Successive powers of a fixed base, clipped to an inflated band.

    Elements pushed above the band by intermediate products can descend by
    at most the cone penalty before settling, so clipping at
    k_max + penalty loses nothing that could re-enter the requested band.
    """

    def __init__(self, u: Transseries, ctx: Context):
        low = [e for e in u._terms if e <= EXP_ZERO]
        if low:
            # float-mode division dust at or below (0,0) is certified noise
            if ctx.exact or any(abs(u._terms[e]) > ctx.tol for e in low):
                raise DomainError("power-sum base must have order above (0,0)")
            kept = {e: c for e, c in u._terms.items() if e > EXP_ZERO}
            u = Transseries(kept, u.region, u.ambient, mu=u.mu)
        self.u = u
        self.ctx = ctx
        reg = ctx.region
        self.penalty = cone_penalty(u, reg.rho, reg.alpha_max)
        pad = self.penalty if self.penalty is not None else 0
        self.band = Region(reg.alpha_max, reg.k_max + pad, reg.rho)
        self.pows: list[Transseries] = [clip(unit(), self.band)]

    def power(self, j: int) -> Transseries:
        while len(self.pows) <= j:
            self.pows.append(clip(mul(self.pows[-1], self.u), self.band))
        return self.pows[j]

    def claimed_region(self, j_used: int) -> Region:
        region = self.ctx.region
        for j in range(1, j_used + 1):
            region = region.intersect(self.pows[j].region)
        if self.u.region is not None:
            if self.penalty is None:
                return Region(region.alpha_max, NO_CLAIM, region.rho)
            if self.penalty:
                region = Region(region.alpha_max, region.k_max - self.penalty, region.rho)
        return region


def power_apply(u: Transseries, coefs: Iterable, ctx: Context, cache: _PowerCache | None = None) -> Transseries:
    """sum_j coefs[j] * u^j truncated to the working region.

    The iteration stops once the running power has no terms left on the
    inflated band (no later power can reach back into the claim) or the
    coefficient stream ends.
    """
    cache = cache or _PowerCache(u, ctx)
    acc: dict[Exponent, object] = {}
    last_j = 0
    for j, c in enumerate(coefs):
        p = cache.power(j)
        last_j = j
        if j > 0 and p.is_zero():
            break
        if c == 0:
            continue
        for e, v in p._terms.items():
            acc[e] = acc.get(e, 0) + c * v
    region = cache.claimed_region(last_j)
    mu = _min_opt(Fraction(0), u.mu)
    kept = {e: c for e, c in acc.items() if region.contains(e, ambient=True)}
    return Transseries(kept, region, True, mu=mu)


def _capped(gen, cap: int = 4096):
    for j, c in enumerate(gen):
        if j > cap:
            raise DomainError("power sum failed to terminate (cap exceeded)")
        yield c


def binom_series(u: Transseries, alpha, ctx: Context, cache: _PowerCache | None = None) -> Transseries:
    """(1+u)^alpha via the binomial expansion (finite for integer alpha >= 0)."""
    if isinstance(alpha, Fraction) and alpha.denominator == 1 and alpha >= 0:
        coefs = [binomial(alpha, j) for j in range(int(alpha) + 1)]
        return power_apply(u, coefs, ctx, cache)

    def gen():
        j = 0
        while True:
            yield binomial(alpha, j)
            j += 1

    return power_apply(u, _capped(gen()), ctx, cache)


def log1p_series(u: Transseries, ctx: Context, cache: _PowerCache | None = None) -> Transseries:
    """log(1+u) = sum_{j>=1} (-1)^{j+1} u^j / j."""

    def gen():
        yield Fraction(0)
        j = 1
        while True:
            yield Fraction((-1) ** (j + 1), j)
            j += 1

    return power_apply(u, _capped(gen()), ctx, cache)


def geometric_series(u: Transseries, ctx: Context) -> Transseries:
    """1/(1-u) = sum_j u^j."""

    def gen():
        while True:
            yield Fraction(1)

    return power_apply(u, _capped(gen()), ctx)


def geometric_inverse(f: Transseries, ctx: Context) -> Transseries:
    """Multiplicative inverse: Lt(f)^{-1} * sum_n (-u)^n with u = f/Lt(f) - 1."""
    e0, c0 = leading(f)
    u = sub(shift(f, -e0.alpha, -e0.k, _invert_coef(c0, ctx)), unit())
    reg = ctx.region
    inv_shift_ctx = ctx.with_region(
        Region(reg.alpha_max + e0.alpha, reg.k_max + e0.k, reg.rho)
    )

    def gen():
        sign = 1
        while True:
            yield Fraction(sign)
            sign = -sign

    core = power_apply(u, _capped(gen()), inv_shift_ctx)
    return shift(core, -e0.alpha, -e0.k, _invert_coef(c0, ctx))


def _invert_coef(c, ctx: Context):
    if ctx.exact:
        return Fraction(1) / Fraction(c)
    return 1.0 / float(c)


# -- comparison helpers ---------------------------------------------------


def common_region(f: Transseries, g: Transseries, region: Region | None = None) -> Region | None:
    return intersect_regions(intersect_regions(f.region, g.region), region)


def max_abs_diff(f: Transseries, g: Transseries, region: Region | None = None):
    """Largest |coefficient difference| over the common claimed region."""
    reg = common_region(f, g, region)
    worst = 0
    table = {}
    support = set(f._terms) | set(g._terms)
    for e in support:
        if reg is not None and not reg.contains(e, ambient=True):
            continue
        d = abs(f.coeff(e) - g.coeff(e))
        if d != 0:
            table[e] = d
        if d > worst:
            worst = d
    return worst, table


def equal_on(f: Transseries, g: Transseries, ctx: Context, region: Region | None = None) -> bool:
    worst, _ = max_abs_diff(f, g, region or ctx.region)
    return ctx.is_zero(worst) if not ctx.exact else worst == 0


# -- text / JSON forms ----------------------------------------------------


def _coef_text(c) -> str:
    if isinstance(c, float):
        return repr(c)
    return str(c)


def to_text(f: Transseries, unicode_ell: bool = False) -> str:
    """Canonical text form, terms in lex order: ``x + 2*x^2*L^-1 + x^2``."""
    if f.is_zero():
        return "0"
    ell = "ℓ" if unicode_ell else "L"
    chunks: list[str] = []
    for e, c in f.terms:
        parts = []
        if e.alpha != 0:
            parts.append("x" if e.alpha == 1 else f"x^{e.alpha}")
        if e.k != 0:
            parts.append(ell if e.k == 1 else f"{ell}^{e.k}")
        neg = c < 0
        mag = -c if neg else c
        if not parts:
            body = _coef_text(mag)
        elif mag == 1 and not isinstance(mag, float):
            body = "*".join(parts)
        else:
            body = "*".join([_coef_text(mag)] + parts)
        if not chunks:
            chunks.append(("-" if neg else "") + body)
        else:
            chunks.append(("- " if neg else "+ ") + body)
    return " ".join(chunks)


def _coef_json(c):
    if isinstance(c, float):
        return c
    return str(c)


def to_json(f: Transseries, region: Region | None = None) -> dict:
    reg = region if region is not None else f.region
    return {
        "terms": [
            {"alpha": str(e.alpha), "k": e.k, "coef": _coef_json(c)} for e, c in f.terms
        ],
        "region": reg.to_json() if reg is not None else None,
        "ambient": f.ambient,
    }


def from_json(obj: dict) -> Transseries:
    terms = {}
    for t in obj["terms"]:
        c = t["coef"]
        coef = float(c) if isinstance(c, (int, float)) else Fraction(c)
        terms[Exponent(Fraction(t["alpha"]), int(t["k"]))] = coef
    region = Region.from_json(obj["region"]) if obj.get("region") else None
    ambient = bool(obj.get("ambient", False))
    if region is not None:
        mu = min((e.alpha for e in terms), default=None)
        return Transseries(terms, region, ambient, mu=mu)
    return Transseries(terms, None, ambient)
