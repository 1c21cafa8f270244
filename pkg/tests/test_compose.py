import math
from fractions import Fraction

import pytest

from powerlog import Context, Region
from powerlog.errors import NotLH
from powerlog.grid import Exponent
from powerlog.series import (
    add,
    clip,
    from_terms,
    identity,
    leading,
    max_abs_diff,
    monomial,
    mul,
    scalar_mul,
    sub,
    to_float,
    to_text,
    unit,
)
from powerlog.compose import compose, derivative, invert, lie_bracket

from conftest import F, S, rand_lseries, rand_parabolic


def eval_series(f, x: float) -> float:
    """Numeric value of the series at a small positive x (L = -1/log x)."""
    ell = -1.0 / math.log(x)
    return sum(float(c) * x ** float(e.alpha) * ell ** e.k for e, c in f.terms)


CTX = Context(Region(F(5), 6))


class TestDerivative:
    def test_power(self):
        assert derivative(S("x^2")) == S("2*x", ambient=True)

    def test_x_ell(self):
        # (x L)' = L + L^2
        assert derivative(S("x*L")) == S("L + L^2", ambient=True)

    def test_x2_ell_inverse(self):
        got = derivative(S("x^2*L^-1"))
        assert got == S("2*x*L^-1 - x", ambient=True)
        # cross-check by numeric differentiation of x^2 * (-1/log x)^-1
        x, h = 1e-3, 1e-9
        fx = lambda t: t * t * (-math.log(t))
        numeric = (fx(x + h) - fx(x - h)) / (2 * h)
        assert abs(eval_series(got, x) - numeric) < 1e-5 * abs(numeric)

    def test_linear_in_sums(self, rng):
        f, g = rand_lseries(rng, 4), rand_lseries(rng, 4)
        assert derivative(add(f, g)) == add(derivative(f), derivative(g))

    def test_leibniz(self, rng):
        for _ in range(10):
            f, g = rand_lseries(rng, 4), rand_lseries(rng, 4)
            lhs = derivative(mul(f, g))
            rhs = add(mul(derivative(f), g), mul(f, derivative(g)))
            assert max_abs_diff(lhs, rhs)[0] == 0


class TestCompose:
    def test_polynomial_expansion(self):
        out = compose(S("x^2"), S("x + x^2"), CTX)
        assert max_abs_diff(out, S("x^2 + 2*x^3 + x^4"), out.region)[0] == 0

    def test_ell_of_power(self):
        out = compose(S("L", ambient=True), S("x^2"), CTX)
        assert dict(out.terms) == {Exponent(F(0), 1): F(1, 2)}

    def test_ell_of_lambda_x(self):
        # L o (lambda x) = L + log(lambda) L^2 + log(lambda)^2 L^3 + ...
        lam = 3.0
        ctx = Context(Region(F(2), 8), mode="float")
        out = compose(to_float(S("L", ambient=True)), from_terms({(F(1), 0): lam}), ctx)
        lg = math.log(lam)
        for k in range(1, 8):
            assert abs(out.coeff(Exponent(F(0), k)) - lg ** (k - 1)) < 1e-10
        # numeric cross-check at x = 1e-6; the truncation tail is bounded by
        # (log(lam) * L)^9 / (1 - log(lam) * L) ~ 1.2e-10 there
        x = 1e-6
        truth = -1.0 / math.log(lam * x)
        assert abs(eval_series(out, x) - truth) < 1e-9

    def test_rejects_log_leading(self):
        with pytest.raises(NotLH):
            compose(S("x"), S("x*L + x^2"), CTX)

    def test_identity_neutral(self, rng):
        f = rand_parabolic(rng, 4)
        out = compose(f, identity(), CTX)
        assert max_abs_diff(out, f, out.region)[0] == 0
        out2 = compose(identity(), f, CTX)
        assert max_abs_diff(out2, f, out2.region)[0] == 0

    def test_associativity(self, rng):
        ctx = Context(Region(F(4), 4, F(1)))
        for _ in range(6):
            f, g, h = (rand_parabolic(rng, 3) for _ in range(3))
            lhs = compose(compose(f, g, ctx), h, ctx)
            rhs = compose(f, compose(g, h, ctx), ctx)
            assert max_abs_diff(lhs, rhs)[0] == 0

    def test_right_composition_is_morphism(self, rng):
        # (g1+g2) o f = g1 o f + g2 o f and (g1*g2) o f = (g1 o f)*(g2 o f)
        ctx = Context(Region(F(4), 4, F(1)))
        for _ in range(6):
            f = rand_parabolic(rng, 3)
            g1, g2 = rand_lseries(rng, 3, ks=[0, 1]), rand_lseries(rng, 3, ks=[0, 1])
            lhs = compose(add(g1, g2), f, ctx)
            rhs = add(compose(g1, f, ctx), compose(g2, f, ctx))
            assert max_abs_diff(lhs, rhs)[0] == 0
            lhs = compose(mul(g1, g2), f, ctx)
            rhs = mul(compose(g1, f, ctx), compose(g2, f, ctx))
            assert max_abs_diff(lhs, rhs)[0] == 0


class TestInvert:
    def test_linear(self):
        assert dict(invert(S("2*x"), CTX).terms) == {Exponent(F(1), 0): F(1, 2)}

    def test_classical_reversion(self):
        inv = invert(S("x + x^2"), CTX)
        assert clip(inv, Region(F(4), 0)) == clip(
            S("x - x^2 + 2*x^3 - 5*x^4"), Region(F(4), 0)
        )
        back = compose(S("x + x^2"), inv, CTX)
        assert max_abs_diff(back, identity(), back.region)[0] == 0

    def test_strongly_hyperbolic_root(self):
        assert dict(invert(S("x^2"), CTX).terms) == {Exponent(F(1, 2), 0): F(1)}

    def test_two_sided(self, rng):
        ctx = Context(Region(F(4), 4, F(1)))
        for _ in range(6):
            f = rand_parabolic(rng, 4)
            g = invert(f, ctx)
            lhs = compose(f, g, ctx)
            rhs = compose(g, f, ctx)
            assert max_abs_diff(lhs, identity(), lhs.region)[0] == 0
            assert max_abs_diff(rhs, identity(), rhs.region)[0] == 0

    def test_region_soundness_oracle(self, rng):
        small, big = Region(F(3), 2), Region(F(5), 8)
        for _ in range(10):
            f = rand_parabolic(rng, 4)
            inv_s = invert(clip(f, small), Context(small))
            inv_b = invert(f, Context(big))
            assert max_abs_diff(inv_s, inv_b, inv_s.region)[0] == 0


class TestLieBracket:
    def test_antisymmetry_diagonal(self):
        assert lie_bracket(S("x^2"), S("x^2")).is_zero()

    def test_monomial_formula(self):
        # ad_{x^a L^k}(c x^b L^m) = c(a-b) x^(a+b-1) L^(k+m) + c(k-m) x^(a+b-1) L^(k+m+1)
        a, k, b, m, c = F(2), -1, F(3, 2), 2, F(5)
        got = lie_bracket(monomial(b, m, c), monomial(a, k, F(1)))
        want = add(
            monomial(a + b - 1, k + m, c * (a - b)),
            monomial(a + b - 1, k + m + 1, c * (k - m)),
        )
        assert max_abs_diff(got, want)[0] == 0

    def test_x2_x3(self):
        assert lie_bracket(S("x^2"), S("x^3")) == S("x^4", ambient=True)

    def test_bilinear(self, rng):
        f, g, h = (rand_lseries(rng, 3) for _ in range(3))
        lhs = lie_bracket(add(f, g), h)
        rhs = add(lie_bracket(f, h), lie_bracket(g, h))
        assert max_abs_diff(lhs, rhs)[0] == 0

    def test_jacobi(self, rng):
        for _ in range(8):
            f, g, h = (rand_lseries(rng, 3, ks=[0, 1]) for _ in range(3))
            total = add(
                lie_bracket(f, lie_bracket(g, h)),
                add(lie_bracket(g, lie_bracket(h, f)), lie_bracket(h, lie_bracket(f, g))),
            )
            reg = Region(F(4), 2)
            assert max_abs_diff(total, from_terms({}), reg)[0] == 0
