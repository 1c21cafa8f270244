"""Finite normal forms of power-log series under changes of variables.

The elimination loop walks the truncation grid in lex order.  At each slot
that is not reserved for the normal form and carries a nonzero coefficient,
it conjugates by one elementary change of variables

    a*x                     (linear)
    x + c x^beta L^m        (monomial; beta > 1, or beta = 1 with m >= 1)

chosen so the slot's coefficient cancels exactly.  Conjugation by phi acts as
f -> phi^{-1} o f o phi and adds, to first order, the Lie bracket
{c x^beta L^m, a x^alpha L^k} of the change with the leading term of f - id:

    c*a*(alpha-beta) x^(alpha+beta-1) L^(k+m)
    + c*a*(k-m) x^(alpha+beta-1) L^(k+m+1) + h.o.t.

The solvers below pick (beta, m) so the bracket's leading term lands on the
target slot and solve the linear equation in c; the driver verifies the
cancellation after conjugating and falls back to a secant correction, so the
cancellation itself (not any displayed sign convention) is the contract.
Each step leaves every lex-smaller coefficient unchanged, so the loop
terminates on the finite grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .compose import _significant, compose, invert
from .context import EXACT, Context, cexp, clog, cpow
from .errors import (
    DomainError,
    NeedsFloatMode,
    NotApplicable,
    NotLH,
    RegionExhausted,
    ZeroSeries,
)
from .grid import Exponent, Region
from .series import (
    Classification,
    Transseries,
    add,
    binom_series,
    classify,
    clip,
    from_terms,
    identity,
    leading,
    monomial,
    pipeline_rho,
    scalar_mul,
    shift,
    sub,
    to_mode,
    zero,
)

LINEAR = "linear"
MONOMIAL = "monomial"


@dataclass(frozen=True)
class ElementaryChange:
    """ax (linear) or x + c x^beta L^m (monomial, (beta, m) succ (1, 0))."""

    kind: str
    a: object = None
    beta: Fraction | None = None
    m: int | None = None
    c: object = None

    def __post_init__(self):
        if self.kind == LINEAR:
            if not self.a > 0:
                raise NotApplicable("linear change needs a > 0")
        elif self.kind == MONOMIAL:
            beta = Fraction(self.beta)
            object.__setattr__(self, "beta", beta)
            object.__setattr__(self, "m", int(self.m))
            if not (beta > 1 or (beta == 1 and self.m >= 1)):
                raise NotApplicable(f"(beta, m) = ({beta}, {self.m}) is not admissible")
        else:
            raise ValueError(f"unknown change kind {self.kind!r}")

    def realize(self) -> Transseries:
        if self.kind == LINEAR:
            return from_terms({(Fraction(1), 0): self.a})
        return add(identity(), monomial(self.beta, self.m, self.c))

    def is_identity(self) -> bool:
        return (self.kind == LINEAR and self.a == 1) or (
            self.kind == MONOMIAL and self.c == 0
        )

    def to_json(self) -> dict:
        if self.kind == LINEAR:
            return {"kind": LINEAR, "a": _num_json(self.a)}
        return {
            "kind": MONOMIAL,
            "beta": str(self.beta),
            "m": self.m,
            "c": _num_json(self.c),
        }


def linear_change(a) -> ElementaryChange:
    return ElementaryChange(LINEAR, a=a)


def monomial_change(beta, m, c) -> ElementaryChange:
    return ElementaryChange(MONOMIAL, beta=Fraction(beta), m=int(m), c=c)


def _num_json(v):
    return v if isinstance(v, float) else str(v)


@dataclass(frozen=True)
class ParabolicNF:
    alpha: Fraction
    k: int
    a: object
    b: object

    def to_json(self):
        return {
            "type": "parabolic",
            "alpha": str(self.alpha),
            "k": self.k,
            "a": _num_json(self.a),
            "b": _num_json(self.b),
        }


@dataclass(frozen=True)
class HyperbolicNF:
    lam: object
    a: object

    def to_json(self):
        return {"type": "hyperbolic", "lambda": _num_json(self.lam), "a": _num_json(self.a)}


@dataclass(frozen=True)
class StronglyHyperbolicNF:
    alpha: Fraction

    def to_json(self):
        return {"type": "strongly_hyperbolic", "alpha": str(self.alpha)}


@dataclass(frozen=True)
class NormalizationResult:
    nf: object
    nf_series: Transseries
    phi: Transseries
    steps: tuple[ElementaryChange, ...]
    achieved_region: Region

    def to_json(self) -> dict:
        from .series import to_json as series_json

        return {
            "descriptor": self.nf.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "phi": series_json(self.phi),
            "nf_series": series_json(self.nf_series),
            "achieved_region": self.achieved_region.to_json(),
        }


# -- homological solvers ---------------------------------------------------


def solve_homological_parabolic(lead, target, ctx: Context | None = None) -> ElementaryChange | None:
    """Change cancelling d x^gamma L^r from x + a x^alpha L^k + h.o.t.

    gamma != 2*alpha - 1: the bracket term c*a*(alpha-beta) at
    (alpha+beta-1, k+m) gives beta = gamma-alpha+1, m = r-k.
    gamma == 2*alpha - 1: that factor vanishes (beta = alpha) and the
    L-shifted bracket term c*a*(k-m) gives m = r-k-1, solvable unless
    r == 2k+1 (the residual slot, returns None).
    """
    alpha, k, a = Fraction(lead[0]), int(lead[1]), lead[2]
    gamma, r, d = Fraction(target[0]), int(target[1]), target[2]
    if a == 0 or not (gamma, r) > (alpha, k):
        raise NotApplicable("target must lie strictly beyond the leading slot")
    if gamma != 2 * alpha - 1:
        beta, m = gamma - alpha + 1, r - k
        c = d / (a * (beta - alpha))
    elif r != 2 * k + 1:
        beta, m = alpha, r - k - 1
        c = d / (a * (m - k))
    else:
        return None
    if beta < 1 or (beta == 1 and m <= 0):
        raise NotApplicable(
            f"slot (gamma, r) = ({gamma}, {r}) needs an inadmissible change"
        )
    return monomial_change(beta, m, c)


def solve_homological_hyperbolic(lam, a, target, ctx: Context) -> ElementaryChange | None:
    """Change cancelling d x^gamma L^r from lambda*x + a*x*L + h.o.t.

    Conjugation adds c(lambda - lambda^beta) at (beta, m) and
    -c*m*lambda*log(lambda) at (1, m+1) when beta = 1; the slots (1,0) and
    (1,1) are the normal-form slots and return None.
    """
    gamma, r, d = Fraction(target[0]), int(target[1]), target[2]
    if (gamma, r) in ((Fraction(1), 0), (Fraction(1), 1)):
        return None
    if gamma != 1:
        c = d / (cpow(lam, gamma, ctx) - lam)
        return monomial_change(gamma, r, c)
    if r < 2:
        raise NotApplicable("hyperbolic targets at (1, r) need r >= 2")
    m = r - 1
    c = d / (m * lam * clog(lam, ctx))
    return monomial_change(Fraction(1), m, c)


def solve_homological_strongly_hyperbolic(alpha, target, ctx: Context | None = None) -> ElementaryChange:
    """Change cancelling d x^gamma L^r from x^alpha + h.o.t. (alpha != 1).

    Branches by the leading term of phi o f - f o phi:
      gamma == alpha: beta = 1, m = r, factor alpha^(-m) - alpha
        (the expansion of L o x^alpha contributes alpha^(-m), and
        alpha^(-m) != alpha for every admissible m >= 1);
      alpha > 1:      beta = gamma - alpha + 1, m = r, factor alpha;
      alpha < 1:      beta = gamma / alpha, m = r, factor -alpha^(-m).
    Every admissible target slot is eliminable.
    """
    alpha = Fraction(alpha)
    gamma, r, d = Fraction(target[0]), int(target[1]), target[2]
    if not (gamma, r) > (alpha, 0):
        raise NotApplicable("target must lie strictly beyond the leading slot")
    if gamma == alpha:
        c = d / (alpha ** (-r) - alpha)
        return monomial_change(Fraction(1), r, c)
    if alpha > 1:
        return monomial_change(gamma - alpha + 1, r, -d / alpha)
    return monomial_change(gamma / alpha, r, d * alpha**r)


# -- linear preprocessing --------------------------------------------------


def conj_linear(f: Transseries, c, ctx: Context) -> Transseries:
    """phi^{-1} o f o phi for phi = c*x, i.e. f(c x)/c.

    Termwise: v x^alpha L^k -> v c^(alpha-1) x^alpha L^k (1 - log(c) L)^(-k),
    since L(c x) = L / (1 - L log c).  Only pushes terms upward in k.
    """
    if c == 1:
        return f
    need_log = any(e.k != 0 for e in f._terms)
    lg = clog(c, ctx) if need_log else 0
    band = None
    if need_log and lg != 0:
        kmin = min(e.k for e in f._terms)
        band = ctx.with_region(Region(ctx.region.alpha_max, ctx.region.k_max + max(0, -kmin)))
    out = zero(f.ambient)
    expansions: dict[int, Transseries] = {}
    for e, v in f.terms:
        base = v * cpow(c, e.alpha - 1, ctx)
        if e.k == 0 or lg == 0:
            out = add(out, monomial(e.alpha, e.k, base, ambient=f.ambient))
            continue
        if e.k not in expansions:
            u = monomial(0, 1, -lg, ambient=True)
            expansions[e.k] = binom_series(u, Fraction(-e.k), band)
        out = add(out, shift(expansions[e.k], e.alpha, e.k, base))
    region = f.region
    if expansions:
        region = ctx.region.intersect(region) if region is not None else ctx.region
    return clip(Transseries(out._terms, None, f.ambient, mu=f.mu), region)


def linear_change_leading(f: Transseries, ctx: Context) -> tuple[ElementaryChange, Transseries]:
    """Rescale so the leading coefficient becomes 1 (strongly hyperbolic)
    or sign(a) (parabolic with alpha > 1), via phi = c*x with
    c = |coef|^(-1/(alpha-1))."""
    cls = classify(f)
    if cls is Classification.STRONGLY_HYPERBOLIC:
        e0, lam = leading(f)
        if lam == 1:
            return linear_change(1), f
        c = cpow(lam, Fraction(-1, 1) / (e0.alpha - 1), ctx)
    elif cls is Classification.PARABOLIC:
        e0, a = leading(sub(f, identity()))
        if e0.alpha <= 1:
            raise NotApplicable("parabolic leading rescale needs alpha > 1")
        if a in (1, -1):
            return linear_change(1), f
        c = cpow(abs(a), Fraction(-1, 1) / (e0.alpha - 1), ctx)
    else:
        raise NotApplicable("leading rescale applies to strongly hyperbolic or parabolic alpha > 1")
    return linear_change(c), conj_linear(f, c, ctx)


def linear_change_second(f: Transseries, ctx: Context) -> tuple[ElementaryChange, Transseries]:
    """Kill the coefficient a1 at (alpha, k+1) of a parabolic series with
    leading term a x^alpha L^k, k != 0, via phi = c*x.

    Conjugation maps that coefficient to c^(alpha-1) (a1 + k a log c), so
    c = exp(-a1/(k a)).  (Transcendental: float mode only unless a1 = 0.)
    """
    if classify(f) is not Classification.PARABOLIC:
        raise NotApplicable("second linear change applies to parabolic series")
    e0, a = leading(sub(f, identity()))
    if e0.k == 0:
        raise NotApplicable("k = 0: the slot above the leading term is removable by a monomial change")
    a1 = f.coeff(Exponent(e0.alpha, e0.k + 1))
    if a1 == 0:
        return linear_change(1), f
    c = cexp(-a1 / (Fraction(e0.k) * a) if not isinstance(a1, float) else -a1 / (e0.k * a), ctx)
    return linear_change(c), conj_linear(f, c, ctx)


# -- the elimination driver -------------------------------------------------


def conjugate_elementary(f: Transseries, ch: ElementaryChange, ctx: Context) -> Transseries:
    if ch.kind == LINEAR:
        return conj_linear(f, ch.a, ctx)
    phi = ch.realize()
    return compose(invert(phi, ctx), compose(f, phi, ctx), ctx)


def _scrub(f: Transseries, target: Exponent, ctx: Context) -> Transseries:
    """Remove the certified-cancelled slot's float residue."""
    if ctx.exact or target not in f._terms:
        return f
    kept = {e: c for e, c in f._terms.items() if e != target}
    return Transseries(kept, f.region, f.ambient, mu=f.mu)


def _apply_cancelling(f: Transseries, ch: ElementaryChange, target: Exponent, d, ctx: Context):
    """Conjugate and verify the target slot vanished; secant-correct once if
    a nonlinear contribution interfered."""
    conj = conjugate_elementary(f, ch, ctx)
    t = conj.coeff(target)
    if ctx.is_zero(t) if ctx.exact else abs(t) <= 100 * ctx.tol * max(1.0, abs(d)):
        return ch, _scrub(conj, target, ctx)
    slope = (t - d) / ch.c
    if slope == 0:
        raise DomainError(f"change at {target} had no effect (degenerate slot)")
    ch2 = replace(ch, c=-d / slope)
    conj2 = conjugate_elementary(f, ch2, ctx)
    t2 = conj2.coeff(target)
    if ctx.exact and t2 != 0:
        raise DomainError(f"cancellation at {target} failed (nonlinear slot)")
    if not ctx.exact and abs(t2) > 100 * ctx.tol * max(1.0, abs(d)):
        raise DomainError(f"cancellation at {target} failed: residue {t2}")
    return ch2, _scrub(conj2, target, ctx)


class _RhoTooSmall(Exception):
    """Internal: an elementary change dips below the working cone."""

    def __init__(self, needed: Fraction):
        self.needed = needed


def _check_cone(ch: ElementaryChange, ctx: Context) -> None:
    if ch.kind != MONOMIAL or ch.m >= 0:
        return
    needed = Fraction(-ch.m) / (ch.beta - 1) if ch.beta > 1 else Fraction(0)
    if needed > ctx.region.rho:
        raise _RhoTooSmall(needed)


def _nf_parabolic_slots(work: Transseries) -> tuple[set, Exponent]:
    e0, _ = leading(sub(work, identity()))
    residual = Exponent(2 * e0.alpha - 1, 2 * e0.k + 1)
    return {Exponent(Fraction(1), 0), e0, residual}, e0


def normal_form(
    f: Transseries,
    target_region: Region,
    mode: str = EXACT,
    tol: float = 1e-12,
    min_rho: Fraction = Fraction(0),
) -> NormalizationResult:
    """Theorem-style finite normal form with the normalizing change.

    Works on a k-inflated, cone-sloped copy of the target region so that the
    per-step region losses of conjugation still leave the target covered;
    the slope is bumped whenever an elementary change dips below the working
    cone, and retries use more slack.  min_rho lets callers who will compose
    the result into a steeper pipeline request claims in that cone.
    """
    if classify(to_mode(f, Context(target_region, mode, tol))) is Classification.NOT_IN_LH:
        raise NotLH("normal form requires a log-free positive leading term")
    rho = max(pipeline_rho(f), Fraction(1), Fraction(min_rho))
    last = None
    for extra in (4, 16, 64):
        for _bump in range(8):
            ctx = Context(
                Region(target_region.alpha_max, target_region.k_max + extra, rho), mode, tol
            )
            try:
                res = _normalize_once(to_mode(f, ctx), target_region, ctx)
            except _RhoTooSmall as exc:
                rho = max(exc.needed, 2 * rho)
                continue
            break
        else:
            raise RegionExhausted(
                "normalization could not find a stable working cone",
                achieved=None,
                requested=target_region,
            )
        if res.achieved_region.covers(target_region):
            return res
        last = res
        if f.region is not None:
            break
    raise RegionExhausted(
        f"normalization reached {last.achieved_region}, short of {target_region}",
        achieved=last.achieved_region,
        requested=target_region,
    )


def _normalize_once(work: Transseries, target: Region, ctx: Context) -> NormalizationResult:
    steps: list[ElementaryChange] = []
    phi = identity()
    cls = classify(work)

    def push(ch: ElementaryChange, new_work: Transseries):
        nonlocal work, phi
        work = new_work
        if not ch.is_identity():
            steps.append(ch)
            phi = compose(phi, ch.realize(), ctx)

    if cls is Classification.STRONGLY_HYPERBOLIC:
        e0, lam = leading(work)
        if lam != 1:
            ch, new_work = linear_change_leading(work, ctx)
            push(ch, new_work)
        alpha0 = e0.alpha
        nf_slots = {Exponent(alpha0, 0)}
    elif cls in (Classification.HYPERBOLIC_CONTRACTION, Classification.HYPERBOLIC_EXPANSION):
        _, lam = leading(work)
        nf_slots = {Exponent(Fraction(1), 0), Exponent(Fraction(1), 1)}
    else:
        nf_slots, _ = _nf_parabolic_slots(work)

    last_target: Exponent | None = None
    for _ in range(10000):
        sig = _significant(work, ctx)
        candidates = [
            e
            for e in sig._terms
            if e not in nf_slots and target.contains(e, ambient=False)
        ]
        if not candidates:
            break
        e_star = min(candidates)
        d = work.coeff(e_star)
        if last_target is not None and not last_target < e_star:
            raise DomainError("elimination targets failed to increase")
        last_target = e_star

        if cls is Classification.PARABOLIC:
            lead_e, lead_a = leading(sub(work, identity()))
            # only with alpha = 1 is the slot above the leading term outside
            # the bracket's image; alpha > 1 reaches it with beta = 1, m = 1
            if lead_e.alpha == 1 and e_star == Exponent(lead_e.alpha, lead_e.k + 1):
                ch, new_work = linear_change_second(work, ctx)
                resid = new_work.coeff(e_star)
                if not (ctx.is_zero(resid) if ctx.exact else abs(resid) <= 100 * ctx.tol * max(1.0, abs(d))):
                    raise DomainError(f"linear change left residue {resid} at {e_star}")
                push(ch, _scrub(new_work, e_star, ctx))
                continue
            ch = solve_homological_parabolic(
                (lead_e.alpha, lead_e.k, lead_a), (e_star.alpha, e_star.k, d), ctx
            )
        elif cls is Classification.STRONGLY_HYPERBOLIC:
            ch = solve_homological_strongly_hyperbolic(
                alpha0, (e_star.alpha, e_star.k, d), ctx
            )
        else:
            a_cur = work.coeff(Exponent(Fraction(1), 1))
            ch = solve_homological_hyperbolic(lam, a_cur, (e_star.alpha, e_star.k, d), ctx)
        if ch is None:  # pragma: no cover - residual slots are nf_slots
            raise DomainError(f"unexpected unsolvable slot {e_star}")
        _check_cone(ch, ctx)
        ch, new_work = _apply_cancelling(work, ch, e_star, d, ctx)
        push(ch, new_work)
    else:
        raise DomainError("elimination loop cap exceeded")

    achieved = target.intersect(work.region)
    nf_series = clip(_significant(work, ctx), achieved)
    stray = [e for e in nf_series._terms if e not in nf_slots]
    if stray:
        raise DomainError(f"normal form left stray slots {sorted(stray)}")
    descriptor = _descriptor(cls, work, nf_series)
    return NormalizationResult(descriptor, nf_series, phi, tuple(steps), achieved)


def _descriptor(cls: Classification, work: Transseries, nf_series: Transseries):
    if cls is Classification.STRONGLY_HYPERBOLIC:
        e0, _ = leading(work)
        return StronglyHyperbolicNF(e0.alpha)
    if cls in (Classification.HYPERBOLIC_CONTRACTION, Classification.HYPERBOLIC_EXPANSION):
        lam = work.coeff(Exponent(Fraction(1), 0))
        return HyperbolicNF(lam, work.coeff(Exponent(Fraction(1), 1)))
    e0, a = leading(sub(work, identity()))
    b = nf_series.coeff(Exponent(2 * e0.alpha - 1, 2 * e0.k + 1))
    return ParabolicNF(e0.alpha, e0.k, a, b)
