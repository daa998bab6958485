"""Differential-cycle evaluators.

Three realizations of D(f)[tau]:

* smooth gradient graphs (quadrature of the graph pullback, C^2 catalog),
* exact polyhedral Lagrangian cycles (max-affine f, see polyhedral.py),
* exact 1D polylines for piecewise-linear functions on R, convex or not.

All evaluators share one orientation convention, the Minty transport; for a
smooth convex graph it reduces to the standard orientation of the base.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .coefficients import CoefficientFn, SupportError
from .convex import (
    ConvexFunction,
    MaxAffine,
    NonsmoothPointError,
    PiecewiseLinear1D,
    Quadratic,
)
from .forms import (
    Form,
    fiber_scaling,
    gradient_shear,
    linear_lift,
    merge_sign,
    pullback,
)
from .polynomials import Poly, Q, _as_fraction
from .quadrature import (
    QuadratureSpec,
    box_nodes,
    default_spec,
    disk_nodes,
    integrate_box,
)


@dataclass
class EvalResult:
    value: float | Fraction
    error: float = 0.0

    def __float__(self):
        return float(self.value)


@dataclass
class SmoothGraphCycle:
    """Integration of graph pullbacks under x -> (x, grad f(x)) over a box."""

    f: ConvexFunction
    box: Sequence
    spec: QuadratureSpec


def _dets(H: np.ndarray, rows, cols) -> np.ndarray:
    """Vectorized determinants of H[:, rows, :][:, :, cols] for sizes 0..3."""
    k = len(rows)
    if k != len(cols):
        raise ValueError("determinant needs a square block")
    if k == 0:
        return np.ones(H.shape[0])
    sub = H[:, rows, :][:, :, cols]
    if k == 1:
        return sub[:, 0, 0]
    if k == 2:
        return sub[:, 0, 0] * sub[:, 1, 1] - sub[:, 0, 1] * sub[:, 1, 0]
    if k == 3:
        return (sub[:, 0, 0] * (sub[:, 1, 1] * sub[:, 2, 2] - sub[:, 1, 2] * sub[:, 2, 1])
                - sub[:, 0, 1] * (sub[:, 1, 0] * sub[:, 2, 2] - sub[:, 1, 2] * sub[:, 2, 0])
                + sub[:, 0, 2] * (sub[:, 1, 0] * sub[:, 2, 1] - sub[:, 1, 1] * sub[:, 2, 0]))
    return np.linalg.det(sub)


def graph_pullback_integrand(f: ConvexFunction, form: Form):
    """Vectorized x -> (graph map)^* form, the coefficient of the volume form."""
    n = form.n
    pieces = []
    for key, coeff in form.terms.items():
        if coeff.has_params():
            raise SupportError("cannot evaluate a form with free parameters")
        I = [v for v in key if v < n]
        J = [v - n for v in key if v >= n]
        Ic = [v for v in range(n) if v not in I]
        if len(J) != len(Ic):
            continue
        sign, _ = merge_sign(tuple(I), tuple(Ic))
        if sign == 0:
            continue
        pieces.append((coeff, J, Ic, sign))

    def integrand(X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = f.gradient_array(X)
        H = f.hessian_array(X)
        pts = np.concatenate([X, Y], axis=1)
        out = np.zeros(X.shape[0])
        for coeff, J, Ic, sign in pieces:
            vals = coeff.eval_array(pts)
            out += sign * vals * _dets(H, J, Ic)
        return out

    return integrand


def eval_smooth(f: ConvexFunction, form: Form,
                spec: Optional[QuadratureSpec] = None,
                box=None) -> EvalResult:
    """D(f)[form] for twice-differentiable catalog functions."""
    if not f.smooth:
        raise NonsmoothPointError(
            "nonsmooth function: use the polyhedral evaluation path")
    n = form.n
    if form.degree != n or f.n != n:
        raise ValueError("form must be an n-form matching the function dimension")
    box = box or form.support_box()
    if box is None:
        raise SupportError("form needs horizontally compact (or windowed) support")
    spec = spec or default_spec(n)
    val, err = integrate_box(graph_pullback_integrand(f, form), box, spec)
    return EvalResult(val, err)


def _graded_cuts(width: float) -> list:
    """Partition of [0, 1] isolating boundary layers of relative width w."""
    w = min(max(width, 1e-12), 1.0 / 3.0)
    return [0.0, w, 1.0 - w, 1.0]


def _gl_on(lo: float, hi: float, order: int):
    from .quadrature import _leggauss

    x, w = _leggauss(order)
    half = 0.5 * (hi - lo)
    return 0.5 * (lo + hi) + half * x, half * w


def eval_smooth_ridge_aligned(f: ConvexFunction, base: MaxAffine, form: Form,
                              layer: float = 1e-2,
                              order: int = 24, refine: int = 32) -> EvalResult:
    """Smooth-graph evaluation subdivided along the kink loci of ``base``.

    Intended for log-sum-exp smoothings with large beta: their Hessians
    concentrate in O(1/beta) layers along the max-affine ridges, invisible to
    plain tensor quadrature.  The integration domain is split into the
    max-affine regions, each region fanned into triangles from its centroid,
    and every triangle integrated on a tensor grid in (edge, radial)
    coordinates graded so that the boundary layers of width ``layer`` are
    resolved at their own scale.
    """
    from .polyhedral import _clip_to_box, build_polyhedral, window_for

    n = form.n
    box = form.support_box()
    if box is None:
        raise SupportError("form needs horizontally compact (or windowed) support")
    integrand = graph_pullback_integrand(f, form)
    cycle = build_polyhedral(base, window=window_for(base, box))

    def interval_pass(a, b, o):
        total = 0.0
        length = b - a
        cuts = [a + t * length for t in _graded_cuts(layer / max(length, 1e-12))]
        for lo, hi in zip(cuts, cuts[1:]):
            pts, wts = _gl_on(lo, hi, o)
            total += float(np.dot(wts, integrand(pts[:, None])))
        return total

    def triangle_pass(v0, v1, v2, o):
        # P(u, r) = v0 + r (v1 + u (v2 - v1) - v0); |Jacobian| = 2 area r
        v0 = np.asarray(v0, dtype=float)
        v1 = np.asarray(v1, dtype=float)
        v2 = np.asarray(v2, dtype=float)
        e = v2 - v1
        area2 = abs((v1 - v0)[0] * (v2 - v0)[1] - (v1 - v0)[1] * (v2 - v0)[0])
        if area2 == 0.0:
            return 0.0
        elen = float(np.linalg.norm(e))
        h = area2 / elen  # distance from v0 to the edge line
        ucuts = _graded_cuts(layer / elen)
        rcuts = [0.0, 1.0 - min(max(layer / h, 1e-12), 1.0 / 3.0), 1.0]
        total = 0.0
        for ulo, uhi in zip(ucuts, ucuts[1:]):
            up, uw = _gl_on(ulo, uhi, o)
            for rlo, rhi in zip(rcuts, rcuts[1:]):
                rp, rw = _gl_on(rlo, rhi, o)
                U, R = np.meshgrid(up, rp, indexing="ij")
                WU, WR = np.meshgrid(uw, rw, indexing="ij")
                E = v1[None, :] + U.ravel()[:, None] * e[None, :]
                pts = v0[None, :] + R.ravel()[:, None] * (E - v0[None, :])
                wts = (WU * WR).ravel() * R.ravel() * area2
                total += float(np.dot(wts, integrand(pts)))
        return total

    def one_pass(o):
        total = 0.0
        for cell in cycle.cells:
            if cell.dim_x != n:
                continue
            clipped, _ = _clip_to_box(cell.x_vertices, n, box)
            if not clipped:
                continue
            if n == 1:
                (a,), (b,) = clipped
                total += interval_pass(float(a), float(b), o)
            else:
                centroid = [sum(float(v[k]) for v in clipped) / len(clipped)
                            for k in range(2)]
                m = len(clipped)
                for i in range(m):
                    total += triangle_pass(centroid,
                                           [float(v) for v in clipped[i]],
                                           [float(v) for v in clipped[(i + 1) % m]], o)
        return total

    v1 = one_pass(order)
    v2 = one_pass(refine)
    return EvalResult(v2, abs(v2 - v1))


def mass_smooth(f: ConvexFunction, R: float, order: int = 64) -> float:
    """Mass of the gradient graph over the ball of radius R (n <= 2)."""
    n = f.n
    if n == 1:
        pts, wts = box_nodes([(-R, R)], order)
    elif n == 2:
        pts, wts = disk_nodes(R, order_r=order, order_t=2 * order)
    else:
        raise NotImplementedError("mass quadrature implemented for n <= 2")
    H = f.hessian_array(pts)
    HtH = np.einsum("nij,njk->nik", np.transpose(H, (0, 2, 1)), H)
    eye = np.eye(n)[None, :, :]
    dets = np.linalg.det(eye + HtH)
    return float((wts * np.sqrt(dets)).sum())


# -- 1D polylines ------------------------------------------------------------------


@dataclass
class Polyline1DCycle:
    """Oriented polyline realizing D(f) for piecewise-linear f on R.

    Horizontal segments follow the graph of f' left to right; each kink
    contributes the vertical segment from the left slope to the right slope
    (upward at convex kinks, downward at concave ones).  ``flip_vertical``
    deliberately breaks that convention; it exists as a negative control so
    test batteries can demonstrate they detect orientation bugs.
    """

    f: PiecewiseLinear1D
    flip_vertical: bool = False

    def segments(self, lo, hi):
        """Horizontal pieces clipped to [lo, hi] plus vertical kink segments."""
        lines = [lo] + [b for b in self.f.breaks if lo < b < hi] + [hi]
        horiz = []
        for i in range(len(lines) - 1):
            mid = (lines[i] + lines[i + 1]) / 2
            s = self.f.slopes[self.f._segment_index(mid)]
            horiz.append(((lines[i], lines[i + 1]), s))
        vert = [(b, sr, sl) if self.flip_vertical else (b, sl, sr)
                for b, sl, sr in self.f.kinks() if lo <= b <= hi]
        return horiz, vert


def build_1d(f: PiecewiseLinear1D | MaxAffine) -> Polyline1DCycle:
    if isinstance(f, MaxAffine):
        f = PiecewiseLinear1D.from_max_affine(f)
    return Polyline1DCycle(f)


def eval_polyline(cycle: Polyline1DCycle, form: Form,
                  order: int = 128, refine: int = 192,
                  with_error: bool = False):
    """Exact for polynomial atoms with windows; quadrature for bump atoms."""
    n = 1
    if form.n != n or form.degree != 1:
        raise ValueError("polyline evaluation needs a 1-form on T*R")
    support = form.support_box()
    if support is None:
        raise SupportError("form needs horizontally compact (or windowed) support")

    total_exact = Q(0)
    total_float = 0.0
    err = 0.0
    inexact = False
    cdx = form.terms.get((0,), CoefficientFn.zero(n))
    cdy = form.terms.get((1,), CoefficientFn.zero(n))
    if cdx.has_params() or cdy.has_params():
        raise SupportError("cannot evaluate a form with free parameters")

    for sig, poly in cdx.atoms.items():
        atom = CoefficientFn(n, {sig: poly}, declared_box=cdx.declared_box)
        box = atom.support_box()
        if box is None:
            raise SupportError("polynomial coefficient needs a declared window")
        lo, hi = box[0]
        horiz, _ = cycle.segments(lo, hi)
        for (a, b), slope in horiz:
            if b <= a:
                continue
            if not sig:
                restricted = poly.extend(2).subs([Poly.variable(1, 0),
                                                  Poly.const(1, slope)])
                val = restricted.integrate_box([(a, b)], [0])
                total_exact += val.eval_point([Q(0)] * val.nvars)
            else:
                fs = float(slope)
                fn = lambda p: atom.eval_array(
                    np.stack([p[:, 0], np.full(p.shape[0], fs)], axis=1))
                v, e = integrate_box(fn, [(a, b)],
                                     QuadratureSpec(order=order, refine_order=refine))
                total_float += v
                err += e
                inexact = True

    for sig, poly in cdy.atoms.items():
        atom = CoefficientFn(n, {sig: poly}, declared_box=cdy.declared_box)
        box = atom.support_box()
        if box is None:
            raise SupportError("polynomial coefficient needs a declared window")
        lo, hi = box[0]
        _, vert = cycle.segments(lo, hi)
        for x0, sl, sr in vert:
            if not sig:
                restricted = poly.extend(2).subs([Poly.const(1, x0),
                                                  Poly.variable(1, 0)])
                val = restricted.integrate_box([(sl, sr)], [0])
                total_exact += val.eval_point([Q(0)] * val.nvars)
            else:
                fx = float(x0)
                fn = lambda p: atom.eval_array(
                    np.stack([np.full(p.shape[0], fx), p[:, 0]], axis=1))
                a, b = (float(sl), float(sr))
                sgn = 1.0
                if b < a:
                    a, b = b, a
                    sgn = -1.0
                v, e = integrate_box(fn, [(a, b)],
                                     QuadratureSpec(order=order, refine_order=refine))
                total_float += sgn * v
                err += e
                inexact = True

    if inexact:
        value = float(total_exact) + total_float
    else:
        value = total_exact
    return (value, err) if with_error else value


def mass_polyline(cycle: Polyline1DCycle, R: float) -> float:
    horiz, vert = cycle.segments(Q(-_as_fraction(R)), _as_fraction(R))
    total = sum(float(b - a) for (a, b), _ in horiz if b > a)
    total += sum(abs(float(sr - sl)) for x0, sl, sr in vert if abs(float(x0)) <= float(R))
    return total


# -- transform identities -----------------------------------------------------------


class LinearPrecompose(ConvexFunction):
    """x -> f(g x) for an invertible linear map g."""

    def __init__(self, inner: ConvexFunction, g):
        self.inner = inner
        self.n = inner.n
        self.g = np.asarray(g, dtype=float)
        self.smooth = inner.smooth

    def eval_array(self, X):
        return self.inner.eval_array(X @ self.g.T)

    def gradient_array(self, X):
        return self.inner.gradient_array(X @ self.g.T) @ self.g

    def hessian_array(self, X):
        H = self.inner.hessian_array(X @ self.g.T)
        return np.einsum("ij,njk,kl->nil", self.g.T, H, self.g)

    def sup_abs_bound(self, rho):
        gain = float(np.linalg.norm(self.g, 2))
        return self.inner.sup_abs_bound(gain * rho)

    def describe(self):
        return f"precompose({self.inner.describe()})"


class PlusQuadratic(ConvexFunction):
    """f + (x^T A x / 2 + b.x), A positive semidefinite."""

    def __init__(self, inner: ConvexFunction, A, b):
        self.inner = inner
        self.n = inner.n
        self.quad = Quadratic(A, b, 0)
        self.smooth = inner.smooth

    def eval_array(self, X):
        return self.inner.eval_array(X) + self.quad.eval_array(X)

    def gradient_array(self, X):
        return self.inner.gradient_array(X) + self.quad.gradient_array(X)

    def hessian_array(self, X):
        return self.inner.hessian_array(X) + self.quad.hessian_array(X)

    def sup_abs_bound(self, rho):
        return self.inner.sup_abs_bound(rho) + self.quad.sup_abs_bound(rho)

    def describe(self):
        return f"plusquad({self.inner.describe()})"


def transform_identity_residual(f: ConvexFunction, form: Form, transform: tuple,
                                spec: Optional[QuadratureSpec] = None) -> float:
    """Residual of a pushforward identity, both sides computed independently.

    transform is one of
      ("add_quadratic", A, b)   -- D(f + phi) = (G_phi)_* D(f)
      ("linear", g)             -- D(f o g) = sign(det g) (g#)_* D(f)
      ("scale", c), c > 0       -- D(c f) = C_* D(f), C(x, y) = (x, c y)
    """
    n = form.n
    kind = transform[0]
    if kind == "add_quadratic":
        _, A, b = transform
        lhs = eval_smooth(PlusQuadratic(f, A, b), form, spec=spec).value
        rhs = eval_smooth(f, pullback(gradient_shear(n, A, b), form), spec=spec).value
        return abs(float(lhs) - float(rhs))
    if kind == "linear":
        _, g = transform
        from .rumin import _det_sign, _mat_inv_list

        sgn = _det_sign(g, n)
        ginv = _mat_inv_list(g, n)
        lhs = eval_smooth(LinearPrecompose(f, [[float(v) for v in row] for row in g]),
                          form, spec=spec).value
        pulled = pullback(linear_lift(n, ginv), form)
        rhs = sgn * float(eval_smooth(f, pulled, spec=spec,
                                      box=pulled.support_box()).value)
        return abs(float(lhs) - rhs)
    if kind == "scale":
        _, c = transform
        c = _as_fraction(c)
        if c <= 0:
            raise ValueError("scaling tests keep c > 0 so that c f stays convex")
        from .convex import Scaled

        lhs = eval_smooth(Scaled(f, c), form, spec=spec).value
        rhs = eval_smooth(f, pullback(fiber_scaling(n, c), form), spec=spec).value
        return abs(float(lhs) - float(rhs))
    raise ValueError(f"unknown transform {kind!r}")
