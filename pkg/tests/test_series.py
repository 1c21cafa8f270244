import json
import random
from fractions import Fraction

import pytest

from powerlog import Context, Region
from powerlog.errors import ZeroSeries
from powerlog.grid import Exponent
from powerlog.series import (
    Classification,
    add,
    classify,
    clip,
    from_json,
    from_terms,
    geometric_inverse,
    identity,
    leading,
    max_abs_diff,
    monomial,
    mul,
    scalar_mul,
    sub,
    to_json,
    to_text,
    unit,
)

from conftest import F, S, rand_lseries


class TestLeading:
    def test_simple(self):
        assert leading(S("x + x^2")) == (Exponent(F(1), 0), 1)

    def test_negative_k_precedes(self):
        e, c = leading(S("3*x^2*L^-1 + x^2"))
        assert (e.alpha, e.k, c) == (2, -1, 3)

    def test_lex_oracle(self):
        f = S("x^2*L + x*L^3")
        expected = min(e for e, _ in f.terms)  # independent lex comparison
        assert leading(f)[0] == expected == Exponent(F(1), 3)

    def test_zero_raises(self):
        with pytest.raises(ZeroSeries):
            leading(from_terms({}))


class TestClassify:
    def test_dulac_is_parabolic(self):
        assert classify(S("x + x^2*L^-1 + x^2")) is Classification.PARABOLIC

    def test_contraction(self):
        assert classify(S("1/2*x")) is Classification.HYPERBOLIC_CONTRACTION

    def test_expansion(self):
        assert classify(S("3*x + x*L")) is Classification.HYPERBOLIC_EXPANSION

    def test_leading_log_not_in_lh(self):
        assert classify(S("x*L + x^2")) is Classification.NOT_IN_LH

    def test_negative_leading_not_in_lh(self):
        assert classify(S("-x + x^2")) is Classification.NOT_IN_LH

    def test_strongly_hyperbolic(self):
        assert classify(S("2*x^3")) is Classification.STRONGLY_HYPERBOLIC


class TestAddScalar:
    def test_cancellation_prunes(self):
        out = add(S("x + x^2"), scalar_mul(-1, S("x^2")))
        assert out == S("x")

    def test_region_intersection(self):
        f = clip(S("x"), Region(F(3), 2))
        g = clip(S("x^2"), Region(F(2), 5))
        assert add(f, g).region == Region(F(2), 2)

    def test_scalar(self):
        assert scalar_mul(2, S("x + x*L")) == S("2*x + 2*x*L")


class TestMul:
    def test_log_powers_cancel(self):
        assert mul(S("x*L"), S("x*L^-1")) == S("x^2")

    def test_fractional_powers(self):
        assert mul(S("x^1/2"), S("x^1/2")) == S("x")

    def test_brute_force_convolution(self, rng):
        for _ in range(25):
            f, g = rand_lseries(rng, 5), rand_lseries(rng, 5)
            out = mul(f, g)
            acc = {}
            for e1, c1 in f.terms:
                for e2, c2 in g.terms:
                    acc[e1 + e2] = acc.get(e1 + e2, 0) + c1 * c2
            acc = {e: c for e, c in acc.items() if c != 0}
            assert dict(out.terms) == acc

    def test_spec_example(self):
        out = mul(S("x + x*L"), S("x + x*L^-1"))
        assert out == S("x^2*L^-1 + 2*x^2 + x^2*L")

    def test_leading_multiplicativity(self, rng):
        for _ in range(30):
            f, g = rand_lseries(rng, 4), rand_lseries(rng, 4)
            (ef, cf), (eg, cg) = leading(f), leading(g)
            e, c = leading(mul(f, g))
            assert e == ef + eg and c == cf * cg


class TestRingLaws:
    def test_laws_on_random_inputs(self, rng):
        for _ in range(15):
            f, g, h = (rand_lseries(rng, 4) for _ in range(3))
            assert mul(f, g) == mul(g, f)
            assert mul(mul(f, g), h) == mul(f, mul(g, h))
            assert mul(f, add(g, h)) == add(mul(f, g), mul(f, h))
            assert add(f, g) == add(g, f)


class TestGeometricInverse:
    def test_monomial(self):
        out = geometric_inverse(S("2*x"), Context(Region(F(3), 3)))
        assert dict(out.terms) == {Exponent(F(-1), 0): F(1, 2)}
        assert out.ambient

    def test_one_plus_ell(self):
        ctx = Context(Region(F(2), 5))
        out = geometric_inverse(S("1 + L", ambient=True), ctx)
        back = mul(S("1 + L", ambient=True), out)
        worst, _ = max_abs_diff(back, unit(), out.region)
        assert worst == 0
        for k in range(0, 5):
            assert out.coeff(Exponent(F(0), k)) == (-1) ** k

    def test_x_times_series(self):
        ctx = Context(Region(F(2), 6))
        f = S("x + 1/2*x*L")
        out = geometric_inverse(f, ctx)
        back = mul(f, out)
        worst, _ = max_abs_diff(back, unit(), out.region)
        assert worst == 0
        assert out.coeff(Exponent(F(-1), 0)) == 1
        assert out.coeff(Exponent(F(-1), 1)) == F(-1, 2)

    def test_round_trip_random(self, rng):
        ctx = Context(Region(F(3), 4))
        for _ in range(10):
            f = rand_lseries(rng, 4, ks=[0, 1, 2])
            out = geometric_inverse(f, ctx)
            worst, _ = max_abs_diff(mul(f, out), unit(), out.region)
            assert worst == 0


class TestRegionSoundness:
    def test_mul_enlarged_region_oracle(self, rng):
        small, big = Region(F(3), 2), Region(F(6), 7)
        for _ in range(30):
            f, g = rand_lseries(rng, 5), rand_lseries(rng, 5)
            out_s = mul(clip(f, small), clip(g, small))
            out_b = mul(f, g)
            worst, _ = max_abs_diff(out_s, out_b, out_s.region)
            assert worst == 0


class TestTextJson:
    def test_canonical_text(self):
        f = S("x + 2*x^2*L^-1 + x^2")
        assert to_text(f) == "x + 2*x^2*L^-1 + x^2"

    def test_unicode(self):
        assert to_text(S("x*L"), unicode_ell=True) == "x*ℓ"

    def test_negative_and_fractional(self):
        f = S("3/2*x^1/2*L^3 - x^2")
        assert to_text(f) == "3/2*x^1/2*L^3 - x^2"

    def test_json_round_trip(self):
        f = clip(S("x + 1/3*x^2*L^-2"), Region(F(4), 4))
        blob = json.dumps(to_json(f))
        assert from_json(json.loads(blob)) == f

    def test_json_schema(self):
        payload = to_json(S("2*x^2*L^-1"), Region(F(4), 6))
        assert payload == {
            "terms": [{"alpha": "2", "k": -1, "coef": "2"}],
            "region": {"alpha_max": "4", "k_max": 6},
            "ambient": False,
        }


class TestImmutability:
    def test_setattr_blocked(self):
        f = S("x")
        with pytest.raises(AttributeError):
            f.region = None

    def test_meta_consistent_with_terms(self):
        f = S("x + x^2*L^-1 + x^2")
        meta = f.meta
        assert meta.mu == 1
        assert meta.kmin == -1
        assert meta.per_alpha_kmin == {F(1): 0, F(2): -1}
