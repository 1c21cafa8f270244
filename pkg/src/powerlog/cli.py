"""Command-line interface and the series expression parser.

Grammar (whitespace-insensitive)::

    series :=  ['-'] term (('+' | '-') term)*
    term   :=  factor ('*' factor)*
    factor :=  NUMBER | 'x' ['^' RAT] | 'L' ['^' INT]

    NUMBER :=  digits ['.' digits] | digits '/' digits
    RAT    :=  ['-'] digits ['/' digits]

``L`` denotes the germ -1/log x.  Exponents attach greedily, so ``x^1/2``
is x^(1/2).  Decimal coefficients parse to exact rationals in exact mode and
to floats in float mode.

Exit codes: 0 success, 1 parse/IO errors, 2 domain errors (NotLH,
StronglyHyperbolicNotEmbeddable, NeedsFloatMode, NoFlow, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .compose import compose as compose_op
from .compose import invert as invert_op
from .compose import lie_bracket
from .embed import VectorField, embed, flow, verify_embedding, verify_flow_group_law
from .normalize import normal_form
from .context import EXACT, FLOAT, Context
from .errors import DomainError, NonPositiveAlpha, ParseError, PowerlogError
from .grid import Exponent, Region
from .series import (
    Transseries,
    classify,
    to_json,
    to_mode,
    to_text,
    from_terms,
)


# -- tokenizer / parser ------------------------------------------------------


class _Tok:
    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^/":
            toks.append(_Tok(ch, ch, i))
            i += 1
            continue
        if ch in ("x", "X"):
            toks.append(_Tok("x", ch, i))
            i += 1
            continue
        if ch in ("L", "l", "ℓ"):
            toks.append(_Tok("L", ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            toks.append(_Tok("num", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i, ("number", "x", "L", "+", "-"))
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, mode: str, ambient: bool):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.mode = mode
        self.ambient = ambient

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.text or 'end of input'}", tok.pos, (kind,))
        self.i += 1
        return tok

    def _number(self, tok: _Tok):
        if self.peek().kind == "/" and "." not in tok.text:
            self.take("/")
            den = self.take("num")
            if "." in den.text:
                raise ParseError("denominator must be an integer", den.pos, ("integer",))
            return Fraction(int(tok.text), int(den.text))
        return Fraction(tok.text)

    def _signed_rational(self) -> Fraction:
        sign = 1
        if self.peek().kind == "-":
            self.take("-")
            sign = -1
        elif self.peek().kind == "+":
            self.take("+")
        tok = self.take("num")
        if "." in tok.text:
            raise ParseError("exponents must be rational p/q", tok.pos, ("integer", "p/q"))
        return sign * self._number(tok)

    def _factor(self, state: dict):
        tok = self.peek()
        if tok.kind == "num":
            self.take("num")
            state["coef"] = state["coef"] * self._number(tok)
        elif tok.kind == "x":
            if state["has_x"]:
                raise ParseError("x appears twice in one term", tok.pos, ("*", "+", "-"))
            self.take("x")
            expo = Fraction(1)
            if self.peek().kind == "^":
                self.take("^")
                expo = self._signed_rational()
            state["alpha"] += expo
            state["has_x"] = True
        elif tok.kind == "L":
            if state["has_L"]:
                raise ParseError("L appears twice in one term", tok.pos, ("*", "+", "-"))
            self.take("L")
            expo = Fraction(1)
            if self.peek().kind == "^":
                self.take("^")
                expo = self._signed_rational()
            if expo.denominator != 1:
                raise ParseError("L exponent must be an integer", tok.pos, ("integer",))
            state["k"] += int(expo)
            state["has_L"] = True
        else:
            raise ParseError(
                f"expected a factor, found {tok.text or 'end of input'}",
                tok.pos,
                ("number", "x", "L"),
            )

    def _term(self):
        state = {"coef": Fraction(1), "alpha": Fraction(0), "k": 0, "has_x": False, "has_L": False}
        pos = self.peek().pos
        self._factor(state)
        while self.peek().kind == "*":
            self.take("*")
            self._factor(state)
        if not self.ambient and state["alpha"] <= 0:
            raise NonPositiveAlpha(
                f"term with x^{state['alpha']} is outside the positive-exponent class",
                pos,
                ("ambient mode",),
            )
        return state

    def parse(self) -> Transseries:
        terms: dict[Exponent, object] = {}
        sign = Fraction(1)
        if self.peek().kind == "-":
            self.take("-")
            sign = Fraction(-1)
        while True:
            st = self._term()
            e = Exponent(st["alpha"], st["k"])
            coef = sign * st["coef"]
            if self.mode == FLOAT:
                coef = float(coef)
            terms[e] = terms.get(e, 0) + coef
            tok = self.peek()
            if tok.kind == "end":
                break
            if tok.kind == "+":
                self.take("+")
                sign = Fraction(1)
            elif tok.kind == "-":
                self.take("-")
                sign = Fraction(-1)
            else:
                raise ParseError(
                    f"expected '+', '-' or end, found {tok.text}", tok.pos, ("+", "-", "end")
                )
        return Transseries(terms, None, self.ambient)


def parse_series(text: str, mode: str = EXACT, ambient: bool = False) -> Transseries:
    """Parse the surface syntax into an entire (exact everywhere) series."""
    return _Parser(text, mode, ambient).parse()


# -- command implementations --------------------------------------------------


def _read_series(arg: str, ns) -> Transseries:
    text = sys.stdin.read() if arg == "-" else arg
    return parse_series(text, ns.mode, getattr(ns, "ambient", False))


def _region(ns) -> Region:
    return Region(Fraction(ns.alpha_max), ns.k_max)


def _ctx(ns) -> Context:
    return Context(_region(ns), ns.mode, ns.tol)


def _emit(ns, payload: dict, text: str) -> None:
    if ns.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _series_out(ns, f: Transseries, region: Region | None = None) -> None:
    reg = region if region is not None else (f.region or _region(ns))
    _emit(ns, to_json(f, reg), to_text(f, unicode_ell=ns.unicode))


def cmd_parse(ns) -> int:
    f = _read_series(ns.series, ns)
    _series_out(ns, f, _region(ns))
    return 0


def cmd_classify(ns) -> int:
    f = _read_series(ns.series, ns)
    cls = classify(f)
    _emit(ns, {"classification": cls.value}, cls.value)
    return 0


def cmd_normalize(ns) -> int:
    f = _read_series(ns.series, ns)
    res = normal_form(f, _region(ns), ns.mode, ns.tol)
    _emit(
        ns,
        res.to_json(),
        "\n".join(
            [
                f"normal form: {to_text(res.nf_series, ns.unicode)}",
                f"descriptor:  {res.nf.to_json()}",
                f"steps:       {len(res.steps)}",
                f"achieved:    {res.achieved_region}",
            ]
        ),
    )
    return 0


def cmd_invert(ns) -> int:
    f = _read_series(ns.series, ns)
    g = invert_op(to_mode(f, _ctx(ns)), _ctx(ns))
    _series_out(ns, g)
    return 0


def cmd_compose(ns) -> int:
    ctx = _ctx(ns)
    g = to_mode(_read_series(ns.outer, ns), ctx)
    f = to_mode(_read_series(ns.inner, ns), ctx)
    _series_out(ns, compose_op(g, f, ctx))
    return 0


def cmd_bracket(ns) -> int:
    ctx = _ctx(ns)
    eta = to_mode(_read_series(ns.eta, ns), ctx)
    eps = to_mode(_read_series(ns.eps, ns), ctx)
    _series_out(ns, lie_bracket(eta, eps))
    return 0


def cmd_embed(ns) -> int:
    f = _read_series(ns.series, ns)
    x = embed(f, _region(ns), ns.mode, ns.tol)
    _emit(ns, x.to_json(), to_text(x.xi, ns.unicode))
    return 0


def cmd_flow(ns) -> int:
    xi = _read_series(ns.xi, ns)
    t = Fraction(ns.t) if ns.mode == EXACT and float(ns.t).is_integer() else float(ns.t)
    x = VectorField(to_mode(xi, _ctx(ns)))
    out = flow(x, t, _region(ns), ns.tol)
    _series_out(ns, out)
    return 0


def cmd_verify(ns) -> int:
    f = _read_series(ns.series, ns)
    region = _region(ns)
    x = embed(f, region, ns.mode, ns.tol)
    worst, table = verify_embedding(f, x, region, ns.tol)
    if ns.s is not None or ns.t is not None:
        s = float(ns.s if ns.s is not None else 1.0)
        t = float(ns.t if ns.t is not None else 1.0)
        gworst, gtable = verify_flow_group_law(x, s, t, region, ns.tol)
    else:
        gworst, gtable = None, {}
    payload = {
        "embedding_discrepancy": float(worst),
        "per_monomial": [
            {"alpha": str(e.alpha), "k": e.k, "discrepancy": float(v)} for e, v in sorted(table.items())
        ],
    }
    text = f"embedding discrepancy: {float(worst)}"
    if gworst is not None:
        payload["group_law_discrepancy"] = float(gworst)
        payload["group_law_per_monomial"] = [
            {"alpha": str(e.alpha), "k": e.k, "discrepancy": float(v)}
            for e, v in sorted(gtable.items())
        ]
        text += f"\ngroup law discrepancy: {float(gworst)}"
    _emit(ns, payload, text)
    return 0


# -- argument plumbing ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-max", default="6", help="region bound on powers of x (rational)")
    p.add_argument("--k-max", type=int, default=6, help="region bound on powers of L")
    p.add_argument("--mode", choices=(EXACT, FLOAT), default=EXACT)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.add_argument("--unicode", action="store_true", help="print ℓ instead of L")
    p.add_argument("--ambient", action="store_true", help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="powerlog",
        description="Computer algebra for power-log series x^a L^k (L = -1/log x): "
        "normal forms, embeddings in flows, and supporting operations.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def new(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.set_defaults(fn=fn)
        return p

    p = new("parse", cmd_parse, "parse a series and echo its canonical form")
    p.add_argument("series")
    p = new("classify", cmd_classify, "classify by the leading term")
    p.add_argument("series")
    p = new("normalize", cmd_normalize, "compute the finite normal form")
    p.add_argument("series")
    p = new("invert", cmd_invert, "compositional inverse")
    p.add_argument("series")
    p = new("compose", cmd_compose, "composition outer o inner")
    p.add_argument("outer")
    p.add_argument("inner")
    p = new("bracket", cmd_bracket, "Lie bracket {eta, eps} = eta eps' - eta' eps")
    p.add_argument("eta")
    p.add_argument("eps")
    p = new("embed", cmd_embed, "embedding vector field (parabolic/hyperbolic)")
    p.add_argument("series")
    p = new("flow", cmd_flow, "time-t map of a vector field")
    p.add_argument("--xi", required=True, help="field coefficient series")
    p.add_argument("--t", default="1")
    p = new("verify", cmd_verify, "embed and report round-trip discrepancies")
    p.add_argument("series")
    p.add_argument("--s", default=None)
    p.add_argument("--t", default=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return ns.fn(ns)
    except ParseError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"IOError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
