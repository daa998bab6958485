"""Catalog of convex functions with exact value / gradient / Hessian oracles.

The catalog is a deliberate desk-scale selection: quadratics, max-affine
functions, their log-sum-exp smoothings, a couple of closed-form smooth
functions, restrictions of support functions of smooth convex bodies, and
affine shifts / nonnegative scalings / small smooth perturbations of these.
Each variant also supplies a certified over-estimate of sup |f| on a ball,
which feeds the Lipschitz and mass bounds.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .coefficients import CoefficientFn, _mat_inverse
from .polynomials import Q, _as_fraction


class NonsmoothPointError(ValueError):
    """Gradient/Hessian requested where only the polyhedral path is valid."""


class CatalogError(ValueError):
    pass


def _frac_matrix(A, n):
    return tuple(tuple(_as_fraction(A[i][j]) for j in range(n)) for i in range(n))


def _frac_vector(v, n):
    return tuple(_as_fraction(v[i]) for i in range(n))


class ConvexFunction:
    """Base class; subclasses implement the numeric oracles."""

    n: int
    smooth: bool = True

    def eval_array(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient_array(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian_array(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sup_abs_bound(self, rho: float) -> float:
        """Certified upper bound for sup_{|x| <= rho} |f|."""
        raise NotImplementedError

    # convenience single-point wrappers
    def eval(self, x) -> float:
        return float(self.eval_array(np.asarray(x, dtype=float)[None, :])[0])

    def gradient(self, x) -> np.ndarray:
        return self.gradient_array(np.asarray(x, dtype=float)[None, :])[0]

    def hessian(self, x) -> np.ndarray:
        return self.hessian_array(np.asarray(x, dtype=float)[None, :])[0]

    def describe(self) -> str:
        return type(self).__name__


class Quadratic(ConvexFunction):
    """f(x) = x^T A x / 2 + b.x + c with A symmetric positive semidefinite.

    A, b, c are kept as exact rationals so the Legendre transform is an
    exact involution; numeric work uses float caches.
    """

    def __init__(self, A, b=None, c=0):
        A = np.atleast_2d(np.asarray(A, dtype=object))
        n = A.shape[0]
        self.n = n
        self.A = _frac_matrix(A, n)
        self.b = _frac_vector(b if b is not None else [0] * n, n)
        self.c = _as_fraction(c)
        self._Af = np.array([[float(v) for v in row] for row in self.A])
        if not np.allclose(self._Af, self._Af.T):
            raise CatalogError("quadratic matrix must be symmetric")
        eig = np.linalg.eigvalsh(self._Af)
        if eig.min() < -1e-10:
            raise CatalogError("quadratic matrix must be positive semidefinite")
        self._bf = np.array([float(v) for v in self.b])
        self._cf = float(self.c)

    def eval_array(self, X):
        return 0.5 * np.einsum("ni,ij,nj->n", X, self._Af, X) + X @ self._bf + self._cf

    def gradient_array(self, X):
        return X @ self._Af.T + self._bf

    def hessian_array(self, X):
        return np.broadcast_to(self._Af, (X.shape[0],) + self._Af.shape).copy()

    def sup_abs_bound(self, rho):
        lam = max(float(np.linalg.eigvalsh(self._Af).max()), 0.0)
        return 0.5 * lam * rho * rho + float(np.linalg.norm(self._bf)) * rho + abs(self._cf) + 1e-12

    def describe(self):
        return f"quadratic(n={self.n})"


class MaxAffine(ConvexFunction):
    """f(x) = max_i (a_i . x + b_i), exact rational pieces.

    Duplicate pieces are removed and (for n <= 2) pieces dominated
    everywhere are pruned at construction.
    """

    smooth = False

    def __init__(self, pieces: Sequence, prune: bool = True):
        if not pieces:
            raise CatalogError("max-affine needs at least one piece")
        n = len(pieces[0][0])
        self.n = n
        seen = {}
        for a, b in pieces:
            a = _frac_vector(a, n)
            b = _as_fraction(b)
            # identical gradient: only the largest offset survives
            if a in seen:
                seen[a] = max(seen[a], b)
            else:
                seen[a] = b
        self.pieces = sorted(seen.items())
        if prune and n <= 2 and len(self.pieces) > 1:
            from .polyhedral import prune_dominated_pieces

            self.pieces = prune_dominated_pieces(self.pieces)
        self._af = np.array([[float(v) for v in a] for a, _ in self.pieces])
        self._bf = np.array([float(b) for _, b in self.pieces])

    @property
    def m(self) -> int:
        return len(self.pieces)

    def eval_array(self, X):
        return (X @ self._af.T + self._bf).max(axis=1)

    def _active(self, x, tol=1e-12):
        vals = self._af @ np.asarray(x, dtype=float) + self._bf
        top = vals.max()
        return np.nonzero(vals >= top - tol * max(1.0, abs(top)))[0]

    def gradient_array(self, X):
        out = np.empty_like(np.asarray(X, dtype=float))
        for i, x in enumerate(np.asarray(X, dtype=float)):
            act = self._active(x)
            if len(act) > 1:
                raise NonsmoothPointError(
                    "nonsmooth point: use the polyhedral evaluation path")
            out[i] = self._af[act[0]]
        return out

    def hessian_array(self, X):
        self.gradient_array(X)  # raises on nonsmooth points
        return np.zeros((X.shape[0], self.n, self.n))

    def sup_abs_bound(self, rho):
        norms = np.linalg.norm(self._af, axis=1)
        upper = float((norms * rho + self._bf).max())
        lower_neg = float((norms * rho - self._bf).min())
        return max(upper, lower_neg, 0.0)

    def shift(self, lam, c) -> "MaxAffine":
        return MaxAffine([([ai + _as_fraction(l) for ai, l in zip(a, lam)],
                           b + _as_fraction(c)) for a, b in self.pieces], prune=False)

    def scale(self, t) -> "MaxAffine":
        t = _as_fraction(t)
        if t < 0:
            raise CatalogError("scaling factor must be nonnegative")
        if t == 0:
            return MaxAffine([([Q(0)] * self.n, Q(0))], prune=False)
        return MaxAffine([([t * ai for ai in a], t * b) for a, b in self.pieces], prune=False)

    def describe(self):
        return f"maxaffine(n={self.n}, m={self.m})"


class LogSumExp(ConvexFunction):
    """Smoothing of a max-affine function: log sum exp(beta g_i) / beta.

    Lies within [0, log(m)/beta] above the max-affine value everywhere.
    """

    def __init__(self, base: MaxAffine, beta: float):
        if beta <= 0:
            raise CatalogError("beta must be positive")
        self.base = base
        self.beta = float(beta)
        self.n = base.n

    def _weights(self, X):
        z = self.beta * (X @ self.base._af.T + self.base._bf)
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        return w / w.sum(axis=1, keepdims=True), z

    def eval_array(self, X):
        z = self.beta * (X @ self.base._af.T + self.base._bf)
        top = z.max(axis=1)
        return (top + np.log(np.exp(z - top[:, None]).sum(axis=1))) / self.beta

    def gradient_array(self, X):
        w, _ = self._weights(X)
        return w @ self.base._af

    def hessian_array(self, X):
        w, _ = self._weights(X)
        a = self.base._af
        mean = w @ a
        # beta * (E[a a^T] - E[a] E[a]^T) under the softmax weights
        second = np.einsum("nm,mi,mj->nij", w, a, a)
        outer = np.einsum("ni,nj->nij", mean, mean)
        return self.beta * (second - outer)

    def sup_abs_bound(self, rho):
        return self.base.sup_abs_bound(rho) + math.log(self.base.m) / self.beta

    def describe(self):
        return f"lse(n={self.n}, m={self.base.m}, beta={self.beta})"


class SmoothCatalog(ConvexFunction):
    """Closed-form smooth entries: sqrt1p (sqrt(1+|x|^2)) and quartic (|x|^4/4)."""

    NAMES = ("sqrt1p", "quartic")

    def __init__(self, name: str, n: int):
        if name not in self.NAMES:
            raise CatalogError(f"unknown smooth catalog entry {name!r}")
        self.name = name
        self.n = n

    def eval_array(self, X):
        r2 = (X * X).sum(axis=1)
        if self.name == "sqrt1p":
            return np.sqrt(1.0 + r2)
        return 0.25 * r2 * r2

    def gradient_array(self, X):
        r2 = (X * X).sum(axis=1)
        if self.name == "sqrt1p":
            return X / np.sqrt(1.0 + r2)[:, None]
        return X * r2[:, None]

    def hessian_array(self, X):
        N, n = X.shape
        r2 = (X * X).sum(axis=1)
        eye = np.broadcast_to(np.eye(n), (N, n, n))
        outer = np.einsum("ni,nj->nij", X, X)
        if self.name == "sqrt1p":
            f = np.sqrt(1.0 + r2)
            return eye / f[:, None, None] - outer / (f ** 3)[:, None, None]
        return eye * r2[:, None, None] + 2.0 * outer

    def sup_abs_bound(self, rho):
        if self.name == "sqrt1p":
            return math.sqrt(1.0 + rho * rho)
        return 0.25 * rho ** 4

    def describe(self):
        return f"{self.name}(n={self.n})"


class Shifted(ConvexFunction):
    """inner + lambda . x + c."""

    def __init__(self, inner: ConvexFunction, lam, c):
        self.inner = inner
        self.n = inner.n
        self.lam = _frac_vector(lam, self.n)
        self.c = _as_fraction(c)
        self.smooth = inner.smooth
        self._lamf = np.array([float(v) for v in self.lam])
        self._cf = float(self.c)

    def eval_array(self, X):
        return self.inner.eval_array(X) + X @ self._lamf + self._cf

    def gradient_array(self, X):
        return self.inner.gradient_array(X) + self._lamf

    def hessian_array(self, X):
        return self.inner.hessian_array(X)

    def sup_abs_bound(self, rho):
        return self.inner.sup_abs_bound(rho) + float(np.linalg.norm(self._lamf)) * rho + abs(self._cf)

    def describe(self):
        return f"shifted({self.inner.describe()})"


class Scaled(ConvexFunction):
    """t * inner for t >= 0."""

    def __init__(self, inner: ConvexFunction, t):
        t = _as_fraction(t)
        if t < 0:
            raise CatalogError("scaling factor must be nonnegative")
        self.inner = inner
        self.n = inner.n
        self.t = t
        self._tf = float(t)
        self.smooth = inner.smooth or t == 0

    def eval_array(self, X):
        if self._tf == 0.0:
            return np.zeros(X.shape[0])
        return self._tf * self.inner.eval_array(X)

    def gradient_array(self, X):
        if self._tf == 0.0:
            return np.zeros_like(np.asarray(X, dtype=float))
        return self._tf * self.inner.gradient_array(X)

    def hessian_array(self, X):
        if self._tf == 0.0:
            return np.zeros((X.shape[0], self.n, self.n))
        return self._tf * self.inner.hessian_array(X)

    def sup_abs_bound(self, rho):
        return self._tf * self.inner.sup_abs_bound(rho)

    def describe(self):
        return f"scaled({self.inner.describe()}, t={self.t})"


class SmoothField:
    """Smooth (not necessarily convex) scalar field on R^n with exact partials.

    Wraps a coefficient function of x only; gradients and Hessians evaluate
    the exact derivative coefficients.
    """

    def __init__(self, coeff: CoefficientFn):
        if coeff.depends_on_y() or coeff.has_params():
            raise CatalogError("perturbation fields live on x only")
        self.coeff = coeff
        self.n = coeff.n
        self._grad = [coeff.diff(i) for i in range(self.n)]
        self._hess = [[self._grad[i].diff(j) for j in range(self.n)] for i in range(self.n)]

    def eval_array(self, X):
        return self.coeff.eval_x_array(X)

    def gradient_array(self, X):
        return np.stack([g.eval_x_array(X) for g in self._grad], axis=-1)

    def hessian_array(self, X):
        N = X.shape[0]
        H = np.empty((N, self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                H[:, i, j] = H[:, j, i] = self._hess[i][j].eval_x_array(X)
        return H

    def sup_abs_bound(self, rho):
        # coarse certified bound: grid maximum inflated by a safety factor
        grid = np.linspace(-rho, rho, 41)
        pts = np.stack(np.meshgrid(*([grid] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        return 2.0 * float(np.abs(self.eval_array(pts)).max()) + 1e-9


class Perturbed(ConvexFunction):
    """inner + t * psi, convex for |t| within a declared window on a box.

    Convexity is spot-checked on a sample grid at construction.
    """

    def __init__(self, inner: ConvexFunction, psi: SmoothField, t: float,
                 window: float, box: Optional[Sequence[tuple]] = None, check: bool = True):
        if abs(t) > window:
            raise CatalogError("perturbation parameter outside the declared window")
        if not inner.smooth:
            raise CatalogError("perturbed variant needs a smooth inner function")
        self.inner = inner
        self.psi = psi
        self.n = inner.n
        self.t = float(t)
        self.window = float(window)
        self.box = box or [(-5.0, 5.0)] * self.n
        if check:
            self._spot_check()

    def _spot_check(self):
        axes = [np.linspace(float(lo), float(hi), 5) for lo, hi in self.box]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        for s in (-self.window, self.window):
            H = self.inner.hessian_array(pts) + s * self.psi.hessian_array(pts)
            if np.linalg.eigvalsh(H).min() < -1e-8:
                raise CatalogError("perturbation violates convexity on the box")

    def eval_array(self, X):
        return self.inner.eval_array(X) + self.t * self.psi.eval_array(X)

    def gradient_array(self, X):
        return self.inner.gradient_array(X) + self.t * self.psi.gradient_array(X)

    def hessian_array(self, X):
        return self.inner.hessian_array(X) + self.t * self.psi.hessian_array(X)

    def sup_abs_bound(self, rho):
        return self.inner.sup_abs_bound(rho) + abs(self.t) * self.psi.sup_abs_bound(rho)

    def describe(self):
        return f"perturbed({self.inner.describe()}, t={self.t})"


# -- Legendre transform -------------------------------------------------------


def legendre(f: Quadratic) -> Quadratic:
    """Exact conjugate of a positive definite quadratic; an involution."""
    if not isinstance(f, Quadratic):
        raise CatalogError("closed-form Legendre transform only for quadratics")
    eig = np.linalg.eigvalsh(f._Af)
    if eig.min() <= 1e-12:
        raise CatalogError("Legendre transform needs a positive definite matrix")
    Ainv = _mat_inverse(f.A)
    n = f.n
    binv = tuple(-sum(Ainv[i][j] * f.b[j] for j in range(n)) for i in range(n))
    chalf = sum(f.b[i] * Ainv[i][j] * f.b[j] for i in range(n) for j in range(n))
    return Quadratic([list(r) for r in Ainv], list(binv), Q(1, 2) * chalf - f.c)


# -- Lipschitz bounds -----------------------------------------------------------


def lipschitz_bound(f: ConvexFunction, R: float) -> float:
    """Upper bound 2 sup_{|x| <= R+1} |f| for the Lipschitz constant on B_R."""
    return 2.0 * f.sup_abs_bound(float(R) + 1.0)


def smooth_approximation(f: MaxAffine, beta: float) -> LogSumExp:
    """Uniform smoothing with gap at most log(m)/beta."""
    return LogSumExp(f, beta)


# -- piecewise-linear functions on R (possibly non-convex) -----------------------


class PiecewiseLinear1D:
    """Continuous piecewise-linear function on R with exact breakpoints.

    ``breaks`` strictly increasing; ``slopes`` has one more entry; ``value0``
    anchors the function at x = 0.  Not required to be convex.
    """

    def __init__(self, breaks: Sequence, slopes: Sequence, value0):
        self.breaks = [_as_fraction(b) for b in breaks]
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise CatalogError("breakpoints must be strictly increasing")
        self.slopes = [_as_fraction(s) for s in slopes]
        if len(self.slopes) != len(self.breaks) + 1:
            raise CatalogError("need len(breaks) + 1 slopes")
        self.value0 = _as_fraction(value0)
        self._drop_trivial_kinks()

    def _drop_trivial_kinks(self):
        breaks, slopes = [], [self.slopes[0]]
        for b, s in zip(self.breaks, self.slopes[1:]):
            if s == slopes[-1]:
                continue
            breaks.append(b)
            slopes.append(s)
        self.breaks, self.slopes = breaks, slopes

    @classmethod
    def from_max_affine(cls, f: MaxAffine) -> "PiecewiseLinear1D":
        if f.n != 1:
            raise CatalogError("only 1D max-affine functions convert")
        pieces = sorted((a[0], b) for a, b in f.pieces)
        # upper envelope of lines, left to right
        slopes = [pieces[0][0]]
        offs = [pieces[0][1]]
        breaks: list[Fraction] = []
        for a, b in pieces[1:]:
            while True:
                a0, b0 = slopes[-1], offs[-1]
                if a == a0:
                    break
                x = (b0 - b) / (a - a0)
                if breaks and x <= breaks[-1]:
                    breaks.pop()
                    slopes.pop()
                    offs.pop()
                    continue
                breaks.append(x)
                slopes.append(a)
                offs.append(b)
                break
        idx = sum(1 for b in breaks if b <= 0)
        return cls(breaks, slopes, offs[idx])

    def _segment_index(self, x) -> int:
        idx = 0
        for b in self.breaks:
            if x >= b:
                idx += 1
        return idx

    def _lines(self):
        """Per-segment (slope, offset) with f(x) = s x + o on the segment."""
        idx0 = self._segment_index(Q(0))
        lines: list = [None] * len(self.slopes)
        lines[idx0] = (self.slopes[idx0], self.value0)
        # walk right: the next line agrees at the breakpoint
        for i in range(idx0 + 1, len(self.slopes)):
            b = self.breaks[i - 1]
            s_prev, o_prev = lines[i - 1]
            v = s_prev * b + o_prev
            lines[i] = (self.slopes[i], v - self.slopes[i] * b)
        # walk left
        for i in range(idx0 - 1, -1, -1):
            b = self.breaks[i]
            s_next, o_next = lines[i + 1]
            v = s_next * b + o_next
            lines[i] = (self.slopes[i], v - self.slopes[i] * b)
        return lines

    def eval_exact(self, x) -> Fraction:
        x = _as_fraction(x)
        s, o = self._lines()[self._segment_index(x)]
        return s * x + o

    def eval_array(self, X):
        X = np.asarray(X, dtype=float).reshape(-1)
        lines = [(float(s), float(o)) for s, o in self._lines()]
        breaks = [float(b) for b in self.breaks]
        idx = np.searchsorted(breaks, X, side="right")
        out = np.empty_like(X)
        for i, (s, o) in enumerate(lines):
            m = idx == i
            out[m] = s * X[m] + o
        return out

    def kinks(self):
        """List of (breakpoint, left slope, right slope)."""
        return [(b, self.slopes[i], self.slopes[i + 1]) for i, b in enumerate(self.breaks)]

    def is_convex(self) -> bool:
        return all(s2 >= s1 for s1, s2 in zip(self.slopes, self.slopes[1:]))

    def pointwise(self, other: "PiecewiseLinear1D", take_max: bool) -> "PiecewiseLinear1D":
        lines_f = self._lines()
        lines_g = other._lines()
        cuts = sorted(set(self.breaks) | set(other.breaks))

        def seg_bounds(cut_list):
            out = []
            for i in range(len(cut_list) + 1):
                lo = cut_list[i - 1] if i > 0 else None
                hi = cut_list[i] if i < len(cut_list) else None
                out.append((lo, hi))
            return out

        cross = set()
        for lo, hi in seg_bounds(cuts):
            m = _mid(lo, hi)
            sf, of_ = lines_f[self._segment_index(m)]
            sg, og = lines_g[other._segment_index(m)]
            if sf == sg:
                continue
            x = (og - of_) / (sf - sg)
            if (lo is None or x > lo) and (hi is None or x < hi):
                cross.add(x)
        allcuts = sorted(set(cuts) | cross)
        slopes = []
        for lo, hi in seg_bounds(allcuts):
            m = _mid(lo, hi)
            vf = self.eval_exact(m)
            vg = other.eval_exact(m)
            sf, _ = lines_f[self._segment_index(m)]
            sg, _ = lines_g[other._segment_index(m)]
            if vf == vg:
                use_f = sf >= sg if take_max else sf <= sg
            else:
                use_f = vf > vg if take_max else vf < vg
            slopes.append(sf if use_f else sg)
        v0 = max(self.eval_exact(0), other.eval_exact(0)) if take_max else \
            min(self.eval_exact(0), other.eval_exact(0))
        return PiecewiseLinear1D(allcuts, slopes, v0)

    def maximum(self, other):
        return self.pointwise(other, True)

    def minimum(self, other):
        return self.pointwise(other, False)

    def describe(self):
        return f"pwl1d(kinks={len(self.breaks)})"


def _mid(lo, hi):
    if lo is None and hi is None:
        return Q(0)
    if lo is None:
        return hi - 1
    if hi is None:
        return lo + 1
    return (lo + hi) / 2


# -- convex bodies via support functions ------------------------------------------


class ConvexBody:
    """Body in R^{n+1} described by its support function with oracles on
    R^{n+1} minus the origin."""

    n_ambient: int

    def h_array(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_h_array(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess_h_array(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gauge_bound(self) -> float:
        """Certified bound for sup_{|u|=1} |h(u)|."""
        raise NotImplementedError

    def spot_check(self, rng=None):
        rng = rng or np.random.default_rng(0)
        U = rng.normal(size=(16, self.n_ambient))
        U = U[np.linalg.norm(U, axis=1) > 0.3]
        s = 1.0 + rng.random(len(U))
        hu = self.h_array(U)
        hsu = self.h_array(U * s[:, None])
        assert np.allclose(hsu, s * hu, rtol=1e-9), "support function must be 1-homogeneous"
        g = self.grad_h_array(U)
        g2 = self.grad_h_array(U * s[:, None])
        assert np.allclose(g, g2, rtol=1e-8, atol=1e-10), "gradient must be 0-homogeneous"

    def describe(self) -> str:
        return type(self).__name__


class EllipsoidBody(ConvexBody):
    """h(u) = sqrt(u^T M u) for symmetric positive definite M."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        self.M = 0.5 * (M + M.T)
        self.n_ambient = M.shape[0]
        if np.linalg.eigvalsh(self.M).min() <= 1e-12:
            raise CatalogError("ellipsoid matrix must be positive definite")
        self.spot_check()

    def h_array(self, U):
        return np.sqrt(np.einsum("ni,ij,nj->n", U, self.M, U))

    def grad_h_array(self, U):
        MU = U @ self.M.T
        return MU / self.h_array(U)[:, None]

    def hess_h_array(self, U):
        h = self.h_array(U)
        MU = U @ self.M.T
        outer = np.einsum("ni,nj->nij", MU, MU)
        return self.M[None, :, :] / h[:, None, None] - outer / (h ** 3)[:, None, None]

    def gauge_bound(self):
        return math.sqrt(float(np.linalg.eigvalsh(self.M).max())) + 1e-12

    def describe(self):
        return f"ellipsoid(dim={self.n_ambient})"


class PointBody(ConvexBody):
    """Degenerate body {p}: h(u) = p . u."""

    def __init__(self, p):
        self.p = np.asarray(p, dtype=float)
        self.n_ambient = len(self.p)

    def h_array(self, U):
        return U @ self.p

    def grad_h_array(self, U):
        return np.broadcast_to(self.p, U.shape).copy()

    def hess_h_array(self, U):
        return np.zeros((U.shape[0], self.n_ambient, self.n_ambient))

    def gauge_bound(self):
        return float(np.linalg.norm(self.p)) + 1e-12

    def describe(self):
        return f"point({self.p.tolist()})"


class SmoothedBoxBody(ConvexBody):
    """h(u) = (sum (a_i u_i)^4)^{1/4} + eps |u|: a box smoothed into a body
    with positive curvature."""

    def __init__(self, halfwidths, eps=0.1):
        self.a = np.asarray(halfwidths, dtype=float)
        if (self.a <= 0).any():
            raise CatalogError("halfwidths must be positive")
        self.eps = float(eps)
        if self.eps <= 0:
            raise CatalogError("smoothing radius must be positive")
        self.n_ambient = len(self.a)
        self.spot_check()

    def h_array(self, U):
        g4 = ((self.a * U) ** 4).sum(axis=1)
        return g4 ** 0.25 + self.eps * np.linalg.norm(U, axis=1)

    def grad_h_array(self, U):
        c = self.a ** 4
        g = (((self.a * U) ** 4).sum(axis=1)) ** 0.25
        r = np.linalg.norm(U, axis=1)
        return (c * U ** 3) / (g ** 3)[:, None] + self.eps * U / r[:, None]

    def hess_h_array(self, U):
        N, m = U.shape
        c = self.a ** 4
        g = (((self.a * U) ** 4).sum(axis=1)) ** 0.25
        r = np.linalg.norm(U, axis=1)
        grad4 = (c * U ** 3) / (g ** 3)[:, None]
        eye = np.broadcast_to(np.eye(m), (N, m, m))
        H = np.zeros((N, m, m))
        for i in range(m):
            H[:, i, i] += 3.0 * c[i] * U[:, i] ** 2 / g ** 3
        H -= 3.0 * np.einsum("ni,nj->nij", grad4, grad4) / g[:, None, None]
        uhat = U / r[:, None]
        H += self.eps * (eye - np.einsum("ni,nj->nij", uhat, uhat)) / r[:, None, None]
        return H

    def gauge_bound(self):
        return float(self.a.max()) * self.n_ambient ** 0.25 + self.eps + 1e-12

    def describe(self):
        return f"smoothbox(a={self.a.tolist()}, eps={self.eps})"


class BodyRestriction(ConvexFunction):
    """f_K(x) = h_K(x, -1): the convex function attached to a body in R^{n+1}."""

    def __init__(self, body: ConvexBody):
        self.body = body
        self.n = body.n_ambient - 1
        if self.n < 1:
            raise CatalogError("body must live in dimension >= 2")

    def _lift(self, X):
        U = np.empty((X.shape[0], self.n + 1))
        U[:, :self.n] = X
        U[:, self.n] = -1.0
        return U

    def eval_array(self, X):
        return self.body.h_array(self._lift(X))

    def gradient_array(self, X):
        return self.body.grad_h_array(self._lift(X))[:, :self.n]

    def hessian_array(self, X):
        return self.body.hess_h_array(self._lift(X))[:, :self.n, :self.n]

    def sup_abs_bound(self, rho):
        return self.body.gauge_bound() * math.sqrt(1.0 + rho * rho)

    def describe(self):
        return f"restriction({self.body.describe()})"


def body_restriction(K: ConvexBody) -> BodyRestriction:
    return BodyRestriction(K)


# -- routing helpers -----------------------------------------------------------------


def as_max_affine(f: ConvexFunction) -> Optional[MaxAffine]:
    """Unwrap shifts/scalings of a max-affine function exactly, else None."""
    if isinstance(f, MaxAffine):
        return f
    if isinstance(f, Shifted):
        inner = as_max_affine(f.inner)
        return inner.shift(f.lam, f.c) if inner is not None else None
    if isinstance(f, Scaled):
        inner = as_max_affine(f.inner)
        return inner.scale(f.t) if inner is not None else None
    return None
