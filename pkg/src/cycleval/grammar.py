"""Text grammar for forms, functions and bodies.

Form expressions are sums of terms like

    3/2 * x1^2 * y2 * dx1^dy2
    bump(R=2) * x1 * dx1^dx2
    box(-2,2) * y1 * dy1

Each term carries at most one wedge monomial (a 0-form term has none), any
number of coordinate powers, one optional bump factor and one optional box
window.  Serialization writes one term per polynomial monomial and atom, so
parse(serialize(form)) == form exactly.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Optional

from .coefficients import BumpFactor, CoefficientFn, ball_bump
from .convex import (
    ConvexBody,
    ConvexFunction,
    EllipsoidBody,
    LogSumExp,
    MaxAffine,
    PiecewiseLinear1D,
    PointBody,
    Quadratic,
    Scaled,
    Shifted,
    SmoothCatalog,
    SmoothedBoxBody,
)
from .forms import Form
from .polynomials import Poly, Q


class ParseError(ValueError):
    pass


# -- small rational-aware value parser ------------------------------------------


def _tokenize_value(text: str):
    return re.findall(r"\[|\]|,|[^\[\],\s]+", text)


def parse_value(text: str):
    """Parse a scalar or (nested) list literal with rational entries."""
    tokens = _tokenize_value(text)
    pos = 0

    def value():
        nonlocal pos
        if tokens[pos] == "[":
            pos += 1
            items = []
            while tokens[pos] != "]":
                items.append(value())
                if tokens[pos] == ",":
                    pos += 1
            pos += 1
            return items
        tok = tokens[pos]
        pos += 1
        return Fraction(tok)

    out = value()
    if pos != len(tokens):
        raise ParseError(f"trailing tokens in value: {text!r}")
    return out


def _split_top_level(text: str, sep: str) -> list:
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _parse_kwargs(body: str) -> dict:
    out = {}
    for part in _split_top_level(body, ","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ParseError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = parse_value(v.strip())
    return out


# -- form expressions --------------------------------------------------------------

_GEN_RE = re.compile(r"^d([xy])(\d+)$")
_VAR_RE = re.compile(r"^([xy])(\d+)(?:\^(\d+))?$")
_CALL_RE = re.compile(r"^(bump|box)\((.*)\)$")


def _signed_terms(expr: str):
    """Split on top-level +/- keeping signs."""
    expr = expr.strip()
    depth = 0
    terms = []
    cur = []
    sign = 1
    i = 0
    while i < len(expr):
        ch = expr[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        content = "".join(cur).strip()
        if depth == 0 and ch in "+-" and content and cur[-1] not in "*^/eE(":
            terms.append((sign, content))
            sign = 1 if ch == "+" else -1
            cur = []
        elif depth == 0 and ch in "+-" and not content:
            sign = sign if ch == "+" else -sign
            cur = []
        else:
            cur.append(ch)
        i += 1
    if "".join(cur).strip():
        terms.append((sign, "".join(cur).strip()))
    return terms


def parse_form(expr: str, n: int) -> Form:
    """Parse a form expression on T*R^n."""
    terms = _signed_terms(expr)
    if not terms:
        raise ParseError("empty form expression")
    form: Optional[Form] = None
    for sign, term in terms:
        piece = _parse_term(term, n, sign)
        form = piece if form is None else form + piece
    return form


def _parse_term(term: str, n: int, sign: int) -> Form:
    coeff = Q(sign)
    exps = [0] * (2 * n)
    bump: Optional[BumpFactor] = None
    box = None
    key = None
    for raw in _split_top_level(term, "*"):
        tok = raw.strip()
        if not tok:
            continue
        m = _CALL_RE.match(tok)
        if m:
            kind, body = m.groups()
            if kind == "bump":
                if bump is not None:
                    raise ParseError("at most one bump factor per term")
                bump = _parse_bump(body, n)
            else:
                box = _parse_box(body, n)
            continue
        if _GEN_RE.match(tok) or tok.startswith("d"):
            if key is not None:
                raise ParseError("at most one wedge monomial per term")
            key, wsign = _parse_wedge(tok, n)
            coeff *= wsign
            continue
        m = _VAR_RE.match(tok)
        if m:
            xy, idx, power = m.groups()
            i = int(idx)
            if not 1 <= i <= n:
                raise ParseError(f"coordinate index out of range: {tok}")
            slot = (i - 1) if xy == "x" else (n + i - 1)
            exps[slot] += int(power or 1)
            continue
        try:
            coeff *= Fraction(tok)
        except ValueError as exc:
            raise ParseError(f"cannot parse factor {tok!r}") from exc
    poly = Poly.monomial(2 * n, exps, coeff)
    if bump is not None:
        c = CoefficientFn(n, {(bump,): poly})
    else:
        c = CoefficientFn.from_poly(n, poly, box=box)
    if key is None:
        key = ()
    return Form(n, len(key), {key: c})


def _parse_wedge(tok: str, n: int):
    key: list = []
    sign = 1
    for gen in tok.split("^"):
        m = _GEN_RE.match(gen.strip())
        if not m:
            raise ParseError(f"bad generator {gen!r}")
        xy, idx = m.groups()
        i = int(idx)
        if not 1 <= i <= n:
            raise ParseError(f"generator index out of range: {gen}")
        code = (i - 1) if xy == "x" else (n + i - 1)
        from .forms import merge_sign

        s, merged = merge_sign(tuple(key), (code,))
        if s == 0:
            return tuple(), 0
        sign *= s
        key = list(merged)
    return tuple(key), sign


def _parse_bump(body: str, n: int) -> BumpFactor:
    kw = _parse_kwargs(body)
    p = int(kw.pop("p", 1))
    m = int(kw.pop("m", 0))
    if "R" in kw:
        R = kw.pop("R")
        base = ball_bump(n, R)
    elif "M" in kw:
        M = kw.pop("M")
        base = BumpFactor(tuple(tuple(Q(v) for v in row) for row in M))
    else:
        raise ParseError("bump needs R= or M=")
    if kw:
        raise ParseError(f"unknown bump arguments {sorted(kw)}")
    return BumpFactor(base.M, p, m)


def _parse_box(body: str, n: int):
    vals = [Fraction(v.strip()) for v in _split_top_level(body, ",") if v.strip()]
    if len(vals) == 1:
        a = abs(vals[0])
        return tuple((-a, a) for _ in range(n))
    if len(vals) == 2 * n:
        return tuple((vals[2 * k], vals[2 * k + 1]) for k in range(n))
    raise ParseError("box needs one halfwidth or 2n bounds")


def serialize_form(form: Form) -> str:
    """Canonical expression; parse(serialize(f)) == f exactly."""
    n = form.n
    bits = []
    for key in sorted(form.terms):
        coeff = form.terms[key]
        wedge = "^".join(("dx%d" % (v + 1)) if v < n else ("dy%d" % (v - n + 1))
                         for v in key)
        for sig, poly in sorted(coeff.atoms.items(), key=lambda kv: repr(kv[0])):
            for e, c in sorted(poly.terms.items()):
                factors = [str(c)]
                for v, p in enumerate(e):
                    if p == 0:
                        continue
                    name = ("x%d" % (v + 1)) if v < n else ("y%d" % (v - n + 1))
                    factors.append(name if p == 1 else f"{name}^{p}")
                for f in sig:
                    factors.append(_serialize_bump(f))
                if not sig and coeff.declared_box is not None:
                    factors.append("box(%s)" % ",".join(
                        f"{lo},{hi}" for lo, hi in coeff.declared_box))
                if wedge:
                    factors.append(wedge)
                bits.append(" * ".join(factors))
    return " + ".join(bits) if bits else "0"


def _serialize_bump(f: BumpFactor) -> str:
    n = len(f.M)
    args = []
    R2 = None
    diag = all(f.M[i][j] == 0 for i in range(n) for j in range(n) if i != j)
    if diag and len({f.M[i][i] for i in range(n)}) == 1 and f.M[0][0] > 0:
        inv = 1 / f.M[0][0]
        # R is rational iff inv is a perfect square of a rational
        num, den = inv.numerator, inv.denominator
        rn, rd = _isqrt_exact(num), _isqrt_exact(den)
        if rn is not None and rd is not None:
            args.append(f"R={Fraction(rn, rd)}")
            R2 = True
    if R2 is None:
        args.append("M=[%s]" % ",".join(
            "[%s]" % ",".join(str(v) for v in row) for row in f.M))
    if f.beta_pow != 1:
        args.append(f"p={f.beta_pow}")
    if f.denom_pow != 0:
        args.append(f"m={f.denom_pow}")
    return "bump(%s)" % ",".join(args)


def _isqrt_exact(k: int) -> Optional[int]:
    import math

    r = math.isqrt(k)
    return r if r * r == k else None


# -- function and body specs ----------------------------------------------------------


def parse_function(spec, n: int) -> ConvexFunction | PiecewiseLinear1D:
    """Build a catalog function from a spec string or dict.

    String form: ``<kind> key=value ...`` with the modifiers ``shift=``,
    ``shiftc=`` and ``scale=`` applied afterwards; e.g.
    ``quadratic A=[[2,0],[0,1]] b=[0,0] c=0 scale=2``.
    """
    if isinstance(spec, dict):
        kw = {k: v for k, v in spec.items() if k != "kind"}
        kind = spec["kind"]
    else:
        parts = _split_top_level(spec.strip(), " ")
        parts = [p for p in parts if p.strip()]
        kind = parts[0]
        kw = _parse_kwargs(",".join(parts[1:]))
    shift = kw.pop("shift", None)
    shiftc = kw.pop("shiftc", Q(0))
    scale = kw.pop("scale", None)
    f = _build_function(kind, kw, n)
    if scale is not None:
        f = Scaled(f, scale)
    if shift is not None:
        f = Shifted(f, shift, shiftc)
    return f


def _build_function(kind: str, kw: dict, n: int):
    if kind == "quadratic":
        return Quadratic(kw["A"], kw.get("b"), kw.get("c", 0))
    if kind == "maxaffine":
        return MaxAffine([(p[0], p[1]) for p in kw["pieces"]])
    if kind == "lse":
        base = MaxAffine([(p[0], p[1]) for p in kw["pieces"]])
        return LogSumExp(base, float(kw["beta"]))
    if kind == "smooth":
        name = kw["name"]
        if isinstance(name, list):
            raise ParseError("smooth needs name=sqrt1p or name=quartic")
        return SmoothCatalog(str(name), n)
    if kind == "pwl":
        if n != 1:
            raise ParseError("piecewise-linear specs require n=1")
        return PiecewiseLinear1D(kw["breaks"], kw["slopes"], kw.get("v0", 0))
    if kind == "body":
        raise ParseError("use parse_body for body specs")
    raise ParseError(f"unknown function kind {kind!r}")


def parse_body(spec, n: int) -> ConvexBody:
    """Body specs: ``ellipsoid M=[[...]]``, ``point p=[...]``,
    ``smoothbox a=[...] eps=1/10`` (matrices live in R^{n+1})."""
    if isinstance(spec, dict):
        kind = spec["kind"]
        kw = {k: v for k, v in spec.items() if k != "kind"}
    else:
        parts = [p for p in _split_top_level(spec.strip(), " ") if p.strip()]
        kind = parts[0]
        if kind == "body":
            parts = parts[1:]
            kind = parts[0]
        kw = _parse_kwargs(",".join(parts[1:]))
    if kind == "ellipsoid":
        M = [[float(v) for v in row] for row in kw["M"]]
        return EllipsoidBody(M)
    if kind == "point":
        return PointBody([float(v) for v in kw["p"]])
    if kind == "smoothbox":
        return SmoothedBoxBody([float(v) for v in kw["a"]],
                               eps=float(kw.get("eps", Q(1, 10))))
    raise ParseError(f"unknown body kind {kind!r}")


CATALOG_TEXT = """\
Form expression grammar (forms on T*R^n, coordinates x1..xn, y1..yn):
  term     := [rational] factors... [wedge]
  factors  := x<i>[^p] | y<j>[^p] | bump(R=<rat>[,p=..][,m=..])
              | bump(M=[[..],..]) | box(<halfwidth>) | box(lo1,hi1,...)
  wedge    := dx<i>^...^dy<j>
  examples : 3/2 * x1^2 * y2 * dx1^dy2
             bump(R=2) * x1 * dx1^dx2
             box(-2,2) * y1 * dy1

Function specs (string or {"kind": ...} dict), modifiers shift=, shiftc=, scale=:
  quadratic A=[[2,0],[0,1]] b=[0,0] c=0
  maxaffine pieces=[[[1,0],0],[[-1,0],0]]
  lse pieces=[[[1],0],[[-1],0]] beta=50
  smooth name=sqrt1p            (also: quartic)
  pwl breaks=[0] slopes=[-1,1] v0=0     (n = 1 only)

Body specs (support functions on R^{n+1}):
  ellipsoid M=[[1,0,0],[0,1,0],[0,0,1]]
  point p=[0,0,1]
  smoothbox a=[1,1,1] eps=1/10
"""
