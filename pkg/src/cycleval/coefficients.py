"""Coefficient functions for differential forms on T*R^n.

Two kinds are supported, and both stay inside the class under addition,
multiplication, exact partial differentiation and linear substitutions in x:

* polynomials in (x, y) with exact rational coefficients, optionally tagged
  with an axis-aligned ``support box`` in x (the window used by exact
  integration);
* bump-modulated terms  ``p(x, y) * beta_M(x)^a / q_M(x)^m``  where
  ``q_M(x) = 1 - x^T M x`` for a rational positive definite matrix M and
  ``beta_M(x) = exp(1 - 1/q_M(x))`` inside the ellipsoid ``x^T M x < 1``,
  extended by zero outside.  Differentiating beta_M produces exactly the
  inverse powers of q_M that the ``denom_pow`` slot tracks, so derivatives of
  any order remain in the class.

A coefficient is a finite sum of such atoms.  Atoms with distinct bump
signatures are treated as linearly independent, which is sound for every
identity asserted by the workbench (claimed zeros are genuine zeros).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .polynomials import Poly, Q, _as_fraction

Matrix = tuple  # tuple[tuple[Fraction, ...], ...]
BoxT = tuple   # tuple[tuple[Fraction, Fraction], ...]


class SupportError(ValueError):
    """Raised when an operation needs a horizontal support that is missing."""


def _sym_matrix(M, n: int) -> Matrix:
    rows = []
    for i in range(n):
        rows.append(tuple(_as_fraction(M[i][j]) for j in range(n)))
    M = tuple(rows)
    for i in range(n):
        for j in range(n):
            if M[i][j] != M[j][i]:
                raise ValueError("bump matrix must be symmetric")
    return M


def _mat_inverse(M: Matrix) -> Matrix:
    n = len(M)
    a = [[Q(M[i][j]) for j in range(n)] + [Q(1) if k == i else Q(0) for k in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        a[col] = [v / pv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return tuple(tuple(a[i][n + j] for j in range(n)) for i in range(n))


def _sqrt_upper(x: Fraction) -> Fraction:
    """Rational over-estimate of sqrt(x) for x >= 0."""
    if x < 0:
        raise ValueError("negative radicand")
    s = math.sqrt(float(x))
    up = Fraction(s).limit_denominator(10**9) + Fraction(1, 10**6)
    while up * up < x:
        up += Fraction(1, 10**6)
    return up


@dataclass(frozen=True)
class BumpFactor:
    """``beta_M(x)^beta_pow / q_M(x)^denom_pow`` with q_M = 1 - x^T M x."""

    M: Matrix
    beta_pow: int = 1
    denom_pow: int = 0

    def q_poly(self, nvars: int) -> Poly:
        n = len(self.M)
        terms = {(0,) * nvars: Q(1)}
        p = Poly(nvars, terms)
        for i in range(n):
            for j in range(n):
                if self.M[i][j]:
                    e = [0] * nvars
                    e[i] += 1
                    e[j] += 1
                    p = p - Poly(nvars, {tuple(e): self.M[i][j]})
        return p

    def bbox(self) -> BoxT:
        inv = _mat_inverse(self.M)
        n = len(self.M)
        out = []
        for i in range(n):
            h = _sqrt_upper(inv[i][i])
            out.append((-h, h))
        return tuple(out)

    def transform(self, G: Sequence[Sequence[Fraction]]) -> "BumpFactor":
        """Bump factor of ``x -> beta_M(G x)``; new matrix is G^T M G."""
        n = len(self.M)
        GT_M_G = tuple(
            tuple(
                sum(G[a][i] * self.M[a][b] * G[b][j] for a in range(n) for b in range(n))
                for j in range(n)
            )
            for i in range(n)
        )
        return BumpFactor(GT_M_G, self.beta_pow, self.denom_pow)


def ball_bump(n: int, R) -> BumpFactor:
    """The standard bump supported in |x| < R, i.e. M = I / R^2."""
    R = _as_fraction(R)
    M = tuple(tuple(Q(1, 1) / (R * R) if i == j else Q(0) for j in range(n)) for i in range(n))
    return BumpFactor(M)


Signature = tuple  # tuple[BumpFactor, ...] sorted


def _merge_bumps(a: Signature, b: Signature) -> Signature:
    by_m: dict[Matrix, list[int]] = {}
    for f in list(a) + list(b):
        pows = by_m.setdefault(f.M, [0, 0])
        pows[0] += f.beta_pow
        pows[1] += f.denom_pow
    return tuple(sorted(
        (BumpFactor(M, bp, dp) for M, (bp, dp) in by_m.items()),
        key=lambda f: (f.M, f.beta_pow, f.denom_pow),
    ))


class CoefficientFn:
    """Finite sum of polynomial / bump-modulated atoms on T*R^n.

    ``n`` is the base dimension; polynomial variables are
    (x_1..x_n, y_1..y_n, params...).  ``declared_box`` marks the horizontal
    window of a purely polynomial coefficient (bump atoms carry their own
    support).
    """

    __slots__ = ("n", "atoms", "declared_box")

    def __init__(self, n: int, atoms=None, declared_box: Optional[BoxT] = None):
        self.n = n
        norm: dict[Signature, Poly] = {}
        if atoms:
            for sig, poly in (atoms.items() if isinstance(atoms, dict) else atoms):
                sig, poly = _canonical_atom(sig, poly)
                if poly.is_zero():
                    continue
                if sig in norm:
                    s = norm[sig] + poly
                    if s.is_zero():
                        del norm[sig]
                    else:
                        norm[sig] = s
                else:
                    norm[sig] = poly
        self.atoms = norm
        self.declared_box = _norm_box(declared_box)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "CoefficientFn":
        return cls(n)

    @classmethod
    def from_poly(cls, n: int, poly: Poly, box: Optional[BoxT] = None) -> "CoefficientFn":
        return cls(n, {(): poly}, declared_box=box)

    @classmethod
    def constant(cls, n: int, c) -> "CoefficientFn":
        return cls.from_poly(n, Poly.const(2 * n, c))

    @classmethod
    def bump(cls, n: int, factor: BumpFactor, poly: Optional[Poly] = None) -> "CoefficientFn":
        if poly is None:
            poly = Poly.const(2 * n, 1)
        return cls(n, {(factor,): poly})

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.atoms

    def has_bump(self) -> bool:
        return any(sig for sig in self.atoms)

    def nvars(self) -> int:
        return max((p.nvars for p in self.atoms.values()), default=2 * self.n)

    def has_params(self) -> bool:
        return any(p.nvars > 2 * self.n and any(any(e[2 * self.n:]) for e in p.terms)
                   for p in self.atoms.values())

    def depends_on_y(self) -> bool:
        n = self.n
        for p in self.atoms.values():
            for e in p.terms:
                if any(e[n:2 * n]):
                    return True
        return False

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientFn):
            return NotImplemented
        if self.n != other.n:
            return False
        if set(self.atoms) != set(other.atoms):
            return False
        return all(self.atoms[s] == other.atoms[s] for s in self.atoms)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if not self.atoms:
            return "CoefficientFn(0)"
        bits = []
        for sig, poly in sorted(self.atoms.items(), key=lambda kv: repr(kv[0])):
            tag = "".join(f"[beta^{f.beta_pow}/q^{f.denom_pow}]" for f in sig)
            bits.append(f"({poly}){tag}")
        return "CoefficientFn(" + " + ".join(bits) + ")"

    # -- algebra ---------------------------------------------------------------

    def _with_box(self, box) -> "CoefficientFn":
        out = CoefficientFn(self.n, dict(self.atoms), declared_box=box)
        return out

    def __add__(self, other: "CoefficientFn") -> "CoefficientFn":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        merged: dict[Signature, Poly] = dict(self.atoms)
        for sig, poly in other.atoms.items():
            if sig in merged:
                merged[sig] = merged[sig] + poly
            else:
                merged[sig] = poly
        return CoefficientFn(self.n, merged, declared_box=_box_union(self.declared_box, other.declared_box))

    def __neg__(self) -> "CoefficientFn":
        return CoefficientFn(self.n, {s: -p for s, p in self.atoms.items()},
                             declared_box=self.declared_box)

    def __sub__(self, other: "CoefficientFn") -> "CoefficientFn":
        return self + (-other)

    def scale(self, c) -> "CoefficientFn":
        c = _as_fraction(c)
        if c == 0:
            return CoefficientFn.zero(self.n)
        return CoefficientFn(self.n, {s: p.scale(c) for s, p in self.atoms.items()},
                             declared_box=self.declared_box)

    def __mul__(self, other) -> "CoefficientFn":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, Poly):
            return CoefficientFn(self.n, {s: p * other for s, p in self.atoms.items()},
                                 declared_box=self.declared_box)
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out: dict[Signature, Poly] = {}
        for s1, p1 in self.atoms.items():
            for s2, p2 in other.atoms.items():
                sig = _merge_bumps(s1, s2)
                poly = p1 * p2
                if sig in out:
                    out[sig] = out[sig] + poly
                else:
                    out[sig] = poly
        return CoefficientFn(self.n, out,
                             declared_box=_box_intersection(self.declared_box, other.declared_box))

    __rmul__ = __mul__

    # -- calculus ---------------------------------------------------------------

    def diff(self, var: int) -> "CoefficientFn":
        """Exact partial derivative; ``var`` indexes (x..., y..., params...)."""
        n = self.n
        out: dict[Signature, Poly] = {}

        def acc(sig, poly):
            if poly.is_zero():
                return
            if sig in out:
                out[sig] = out[sig] + poly
            else:
                out[sig] = poly

        for sig, poly in self.atoms.items():
            acc(sig, poly.diff(var))
            if var < n:
                # bump factors depend on x only
                for idx, f in enumerate(sig):
                    dq = Poly.zero(poly.nvars)  # dq/dx_var = -2 (M x)_var
                    for j in range(n):
                        if f.M[var][j]:
                            e = [0] * poly.nvars
                            e[j] = 1
                            dq = dq + Poly(poly.nvars, {tuple(e): -2 * f.M[var][j]})
                    if dq.is_zero():
                        continue
                    # d(beta^a)/dx = a beta^a q^{-2} dq ; d(q^{-m})/dx = -m q^{-m-1} dq
                    rest = list(sig)
                    rest[idx] = BumpFactor(f.M, f.beta_pow, f.denom_pow + 2)
                    acc(tuple(rest), poly * dq * Q(f.beta_pow))
                    if f.denom_pow:
                        rest = list(sig)
                        rest[idx] = BumpFactor(f.M, f.beta_pow, f.denom_pow + 1)
                        acc(tuple(rest), poly * dq * Q(-f.denom_pow))
        return CoefficientFn(self.n, out, declared_box=self.declared_box)

    def subs_linear(self, repl: Sequence[Poly]) -> "CoefficientFn":
        """Compose with a polynomial map; needs the x-part linear in x.

        ``repl[v]`` is the expression substituted for variable ``v``.  Only
        the first 2n slots are required; trailing parameter slots map to
        themselves.
        """
        n = self.n
        m = max(self.nvars(), len(repl))
        full_repl = list(repl) + [Poly.variable(m, v) for v in range(len(repl), m)]
        full_repl = [p.extend(max(m, max(q.nvars for q in full_repl))) for p in full_repl]

        G = None
        if any(sig for sig in self.atoms):
            G = _linear_x_matrix(full_repl[:n], n)

        out: dict[Signature, Poly] = {}
        for sig, poly in self.atoms.items():
            new_sig = tuple(sorted((f.transform(G) for f in sig),
                                   key=lambda f: (f.M, f.beta_pow, f.denom_pow))) if sig else sig
            newp = poly.extend(m).subs(full_repl[:m])
            if new_sig in out:
                out[new_sig] = out[new_sig] + newp
            else:
                out[new_sig] = newp
        new_box = (_box_subs(self.declared_box, full_repl[:n], n)
                   if self.declared_box is not None else None)
        return CoefficientFn(self.n, out, declared_box=new_box)

    # -- numerics -----------------------------------------------------------------

    def eval_array(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (N, >= 2n); parameters must be absent."""
        if self.has_params():
            raise ValueError("cannot evaluate a coefficient with free parameters")
        pts = np.asarray(pts, dtype=float)
        n = self.n
        out = np.zeros(pts.shape[0])
        for sig, poly in self.atoms.items():
            vals = poly.eval_array(pts[:, :poly.nvars] if pts.shape[1] >= poly.nvars
                                   else _pad(pts, poly.nvars))
            for f in sig:
                M = np.array([[float(v) for v in row] for row in f.M])
                quad = np.einsum("ni,ij,nj->n", pts[:, :n], M, pts[:, :n])
                q = 1.0 - quad
                inside = q > 1e-300
                beta = np.zeros_like(q)
                with np.errstate(over="ignore", under="ignore"):
                    beta[inside] = np.exp(1.0 - 1.0 / q[inside])
                factor = np.zeros_like(q)
                factor[inside] = beta[inside] ** f.beta_pow / q[inside] ** f.denom_pow
                vals = vals * factor
            out += vals
        return out

    def eval_x_array(self, xpts: np.ndarray) -> np.ndarray:
        """Evaluate at (x, y=0); requires no y-dependence is intended."""
        xpts = np.asarray(xpts, dtype=float)
        pts = np.zeros((xpts.shape[0], self.nvars()))
        pts[:, :self.n] = xpts
        return self.eval_array(pts)

    def eval_point(self, pt: Sequence[float]) -> float:
        return float(self.eval_array(np.asarray(pt, dtype=float)[None, :])[0])

    # -- restriction and support ----------------------------------------------------

    def restrict_y_zero(self) -> "CoefficientFn":
        n = self.n
        out: dict[Signature, Poly] = {}
        for sig, poly in self.atoms.items():
            kept = {e: c for e, c in poly.terms.items() if not any(e[n:2 * n])}
            if kept:
                out[sig] = Poly(poly.nvars, kept)
        return CoefficientFn(self.n, out, declared_box=self.declared_box)

    def support_box(self) -> Optional[BoxT]:
        """Axis-aligned over-cover of the horizontal support, if known."""
        if self.is_zero():
            return tuple((Q(0), Q(0)) for _ in range(self.n))
        boxes = []
        for sig in self.atoms:
            if sig:
                b = sig[0].bbox()
                for f in sig[1:]:
                    b = _box_intersection(b, f.bbox())
                if self.declared_box is not None:
                    b = _box_intersection(b, self.declared_box)
                boxes.append(b)
            elif self.declared_box is not None:
                boxes.append(self.declared_box)
            else:
                return None
        out = boxes[0]
        for b in boxes[1:]:
            out = _box_union(out, b)
        return out

    def integral_vanishes_by_parity(self) -> bool:
        """True when the x-integral is exactly zero by odd symmetry.

        Bump factors are even in x, so it suffices that every polynomial
        monomial carries an odd power of some x variable (declared boxes must
        be symmetric).
        """
        n = self.n
        if self.declared_box is not None:
            if any(lo != -hi for lo, hi in self.declared_box):
                return False
        for poly in self.atoms.values():
            for e in poly.terms:
                if not any(e[i] % 2 for i in range(n)):
                    return False
        return True


def _pad(pts: np.ndarray, nvars: int) -> np.ndarray:
    out = np.zeros((pts.shape[0], nvars))
    out[:, :pts.shape[1]] = pts
    return out


def _canonical_atom(sig: Signature, poly: Poly) -> tuple[Signature, Poly]:
    """Divide out explicit q_M factors so equal functions share one atom."""
    sig = tuple(sorted(sig, key=lambda f: (f.M, f.beta_pow, f.denom_pow)))
    changed = True
    while changed and not poly.is_zero():
        changed = False
        for idx, f in enumerate(sig):
            if f.denom_pow <= 0:
                continue
            q = f.q_poly(poly.nvars)
            quo = poly.divide_exact(q)
            if quo is not None:
                poly = quo
                lst = list(sig)
                lst[idx] = BumpFactor(f.M, f.beta_pow, f.denom_pow - 1)
                sig = tuple(lst)
                changed = True
                break
    return sig, poly


def _linear_x_matrix(x_repl: Sequence[Poly], n: int):
    """Extract G with repl[i] = sum_j G[i][j] x_j, else raise."""
    G = []
    for i, p in enumerate(x_repl):
        row = [Q(0)] * n
        for e, c in p.terms.items():
            if sum(e) != 1:
                raise ValueError("bump coefficients require a linear substitution in x")
            j = next(v for v, pw in enumerate(e) if pw)
            if j >= n:
                raise ValueError("bump coefficients cannot mix x with y or parameters")
            row[j] = c
        G.append(row)
    return G


def _norm_box(box) -> Optional[BoxT]:
    if box is None:
        return None
    return tuple((_as_fraction(lo), _as_fraction(hi)) for lo, hi in box)


def _box_union(a: Optional[BoxT], b: Optional[BoxT]) -> Optional[BoxT]:
    if a is None:
        return b
    if b is None:
        return a
    return tuple((min(al, bl), max(ah, bh)) for (al, ah), (bl, bh) in zip(a, b))


def _box_intersection(a: Optional[BoxT], b: Optional[BoxT]) -> Optional[BoxT]:
    if a is None:
        return b
    if b is None:
        return a
    out = []
    for (al, ah), (bl, bh) in zip(a, b):
        lo, hi = max(al, bl), min(ah, bh)
        if lo > hi:
            lo = hi = Q(0)
        out.append((lo, hi))
    return tuple(out)


def _box_subs(box: BoxT, x_repl: Sequence[Poly], n: int) -> Optional[BoxT]:
    # declared boxes survive only the identity substitution on x
    for i, p in enumerate(x_repl):
        if p != Poly.variable(p.nvars, i):
            return None
    return box
