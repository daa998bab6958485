"""Experiment layer: valuations mu(f) = D(f)[tau] and the theorem checks.

Builds valuations from horizontally supported n-forms, routes each catalog
function to the right cycle evaluator, and packages the kernel, constancy,
homogeneity, first-variation, Hessian/mixed-discriminant and invariance
experiments used by the acceptance suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .coefficients import CoefficientFn, ball_bump
from .convex import (
    BodyRestriction,
    ConvexFunction,
    EllipsoidBody,
    LogSumExp,
    MaxAffine,
    Perturbed,
    PiecewiseLinear1D,
    Quadratic,
    Scaled,
    Shifted,
    SmoothCatalog,
    SmoothField,
    as_max_affine,
)
from .cycles import (
    EvalResult,
    build_1d,
    eval_polyline,
    eval_smooth,
    eval_smooth_ridge_aligned,
)
from .forms import (
    Form,
    integrate_zero_section,
    linear_lift,
    merge_sign,
    pullback,
)
from .polyhedral import build_polyhedral, eval_polyhedral, window_for
from .polynomials import Poly, Q, _as_fraction
from .quadrature import QuadratureSpec, default_spec, integrate_box
from .rumin import RuminResult, rumin_d


@dataclass
class Valuation:
    """f -> D(f)[tau] for a horizontally supported middle-degree form."""

    tau: Form
    bidegree: Optional[tuple] = None
    _rumin: Optional[RuminResult] = None

    @property
    def n(self) -> int:
        return self.tau.n

    @property
    def rumin(self) -> RuminResult:
        if self._rumin is None:
            self._rumin = RuminResult.of(self.tau)
        return self._rumin


def _ridge_base(f: ConvexFunction) -> Optional[MaxAffine]:
    """Max-affine skeleton marking the Hessian ridges of LSE-like functions."""
    if isinstance(f, LogSumExp):
        return f.base
    if isinstance(f, (Shifted, Scaled)):
        return _ridge_base(f.inner)
    return None


def _lse_beta(f: ConvexFunction) -> Optional[float]:
    if isinstance(f, LogSumExp):
        return f.beta
    if isinstance(f, (Shifted, Scaled)):
        return _lse_beta(f.inner)
    return None


def evaluate(val: Valuation, f: ConvexFunction | PiecewiseLinear1D,
             spec: Optional[QuadratureSpec] = None) -> EvalResult:
    """D(f)[tau] with routing: polyhedral for max-affine, exact polyline for
    1D piecewise-linear, ridge-aligned quadrature for log-sum-exp smoothings,
    plain graph quadrature otherwise."""
    tau = val.tau
    if isinstance(f, PiecewiseLinear1D):
        v, e = eval_polyline(build_1d(f), tau, with_error=True)
        return EvalResult(v, e)
    ma = as_max_affine(f)
    if ma is not None:
        cycle = build_polyhedral(ma, window=window_for(ma, tau.support_box()))
        v, e = eval_polyhedral(cycle, tau, with_error=True)
        return EvalResult(v, e)
    base = _ridge_base(f)
    if base is not None and base.n <= 2:
        beta = _lse_beta(f) or 1.0
        layer = min(0.25, 50.0 / beta)
        return eval_smooth_ridge_aligned(f, base, tau, layer=layer,
                                         order=32, refine=44)
    return eval_smooth(f, tau, spec=spec)


def scale_of(values: Sequence[float]) -> float:
    """max(1, largest |value|); the reference for relative tolerances."""
    vals = [abs(float(v)) for v in values]
    return max(1.0, max(vals, default=0.0))


# -- function battery ------------------------------------------------------------


def _rand_frac(rng, num=6, den=3) -> Fraction:
    return Q(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def _rand_pd_matrix(rng, n, floor=Q(2, 5)):
    G = [[_rand_frac(rng, 3, 2) for _ in range(n)] for _ in range(n)]
    A = [[sum(G[k][i] * G[k][j] for k in range(n)) + (floor if i == j else 0)
          for j in range(n)] for i in range(n)]
    return A


def battery(n: int, seed: int = 7, size: int = 32) -> list:
    """Documented battery of convex functions standing in for Conv(V, R).

    Mix of positive definite quadratics, max-affine functions, their
    log-sum-exp smoothings, closed-form smooth entries, body restrictions
    and shifted/scaled variants.  Entries are O(1)-sized on the evaluation
    boxes, which the mass-bound suite relies on.
    """
    rng = np.random.default_rng(seed)
    out: list[ConvexFunction] = []
    while len(out) < size:
        kind = len(out) % 8
        if kind in (0, 1):
            out.append(Quadratic(_rand_pd_matrix(rng, n),
                                 [_rand_frac(rng, 2, 2) for _ in range(n)],
                                 _rand_frac(rng, 2, 2)))
        elif kind == 2:
            m = int(rng.integers(2, 7))
            out.append(MaxAffine([([_rand_frac(rng, 3, 2) for _ in range(n)],
                                   _rand_frac(rng, 2, 2)) for _ in range(m)]))
        elif kind == 3:
            m = int(rng.integers(2, 5))
            ma = MaxAffine([([_rand_frac(rng, 2, 2) for _ in range(n)],
                             _rand_frac(rng, 2, 2)) for _ in range(m)])
            out.append(LogSumExp(ma, float(rng.choice([12.0, 40.0]))))
        elif kind == 4:
            out.append(SmoothCatalog("sqrt1p" if len(out) % 2 else "quartic", n))
        elif kind == 5:
            M = np.asarray([[float(v) for v in row]
                            for row in _rand_pd_matrix(rng, n + 1, Q(1, 2))])
            out.append(BodyRestriction(EllipsoidBody(M)))
        elif kind == 6:
            inner = Quadratic(_rand_pd_matrix(rng, n))
            out.append(Shifted(inner, [_rand_frac(rng, 2, 2) for _ in range(n)],
                               _rand_frac(rng, 2, 2)))
        else:
            inner = Quadratic(_rand_pd_matrix(rng, n))
            out.append(Scaled(inner, Q(int(rng.integers(1, 4)), 2)))
    return out[:size]


# -- random forms -----------------------------------------------------------------


def _subset_keys(n, degree):
    from .forms import _subsets

    return _subsets(range(2 * n), degree)


def random_bump_form(rng, n: int, degree: Optional[int] = None,
                     bidegree: Optional[tuple] = None,
                     radius=2, max_deg: int = 2, nterms: int = 2,
                     y_dependent: bool = True, coeff_num: int = 6,
                     coeff_den: int = 3) -> Form:
    """Random horizontally supported form with bump-modulated coefficients."""
    if bidegree is not None:
        p, q = bidegree
        degree = p + q
        keys = [k for k in _subset_keys(n, degree)
                if sum(1 for v in k if v < n) == p]
    else:
        assert degree is not None
        keys = _subset_keys(n, degree)
    bump = ball_bump(n, radius)
    terms: dict = {}
    for _ in range(nterms):
        key = keys[rng.integers(len(keys))]
        nv = 2 * n
        e = [0] * nv
        for _ in range(2):
            v = int(rng.integers(0, nv if y_dependent else n))
            e[v] = min(e[v] + int(rng.integers(0, max_deg)), max_deg)
        poly = Poly.monomial(nv, e, _rand_frac(rng, coeff_num, coeff_den))
        if poly.is_zero():
            poly = Poly.const(nv, 1)
        c = CoefficientFn.bump(n, bump, poly)
        terms[key] = terms[key] + c if key in terms else c
    return Form(n, degree, terms)


def window_vanishing_weight(n: int, R=2, power: int = 1) -> Poly:
    """prod_i (R^2 - x_i^2)^power: vanishes on the boundary of [-R, R]^n."""
    R = _as_fraction(R)
    w = Poly.const(2 * n, 1)
    for i in range(n):
        w = w * (Poly.const(2 * n, R * R) - Poly.variable(2 * n, i) ** 2) ** power
    return w


def random_window_form(rng, n: int, degree: int, R=2, nterms: int = 2,
                       max_deg: int = 2, edge_vanishing: bool = True) -> Form:
    """Random form with polynomial coefficients on the window [-R, R]^n.

    With ``edge_vanishing`` the coefficients carry the boundary-vanishing
    weight, so exterior derivatives satisfy the Stokes identity exactly on
    every cycle evaluator.
    """
    R = _as_fraction(R)
    box = tuple((-R, R) for _ in range(n))
    keys = _subset_keys(n, degree)
    w = window_vanishing_weight(n, R) if edge_vanishing else Poly.const(2 * n, 1)
    terms: dict = {}
    for _ in range(nterms):
        key = keys[rng.integers(len(keys))]
        nv = 2 * n
        e = [0] * nv
        for _ in range(2):
            e[int(rng.integers(0, nv))] = int(rng.integers(0, max_deg + 1))
        poly = w * Poly.monomial(nv, e, _rand_frac(rng, 6, 3))
        if poly.is_zero():
            poly = w
        c = CoefficientFn.from_poly(n, poly, box=box)
        terms[key] = terms[key] + c if key in terms else c
    return Form(n, degree, terms)


def random_kernel_form(rng, n: int, radius=2, kind: str = "window") -> Form:
    """tau = d(rho) + omega_s ^ xi, corrected to zero zero-section integral.

    Lies in the kernel of the induced valuation by construction.  The
    ``window`` kind uses boundary-vanishing polynomial coefficients, so the
    correction is exact and polyhedral evaluations stay in exact arithmetic;
    the ``bump`` kind exercises the smooth compactly supported class.
    """
    from .forms import exterior_derivative, standard_symplectic_form, wedge

    if kind == "window":
        rho = random_window_form(rng, n, n - 1, R=radius, nterms=2)
        tau = exterior_derivative(rho)
        if n >= 2:
            xi = random_window_form(rng, n, n - 2, R=radius, nterms=1,
                                    edge_vanishing=False)
            tau = tau + wedge(standard_symplectic_form(n), xi)
        probe = CoefficientFn.from_poly(
            n, window_vanishing_weight(n, radius, power=2),
            box=tuple((-_as_fraction(radius), _as_fraction(radius))
                      for _ in range(n)))
        probe_form = Form(n, n, {tuple(range(n)): probe})
        i_tau = integrate_zero_section(tau)
        i_probe = integrate_zero_section(probe_form)
        return tau + probe_form.scale(-Fraction(i_tau) / Fraction(i_probe))

    rho = random_bump_form(rng, n, degree=n - 1, radius=radius, nterms=2)
    tau = exterior_derivative(rho)
    if n >= 2:
        # for n = 1 there is no (n-2)-form to wedge with omega_s
        xi = random_bump_form(rng, n, degree=n - 2, radius=radius, nterms=1)
        tau = tau + wedge(standard_symplectic_form(n), xi)
    # subtract c * beta(x) vol_x to cancel the zero-section integral
    probe = CoefficientFn.bump(n, ball_bump(n, radius))
    probe_form = Form(n, n, {tuple(range(n)): probe})
    i_tau = float(integrate_zero_section(tau))
    i_probe = float(integrate_zero_section(probe_form))
    return tau + probe_form.scale(Q(-i_tau / i_probe).limit_denominator(10**12))


# -- kernel theorem ------------------------------------------------------------------


@dataclass
class KernelReport:
    mode: str                 # "kernel" | "constant" | "nonkernel"
    values: list
    scale: float
    tolerance: float
    passed: bool
    witness: Optional[tuple] = None
    zero_section_integral: float = 0.0

    def max_abs(self) -> float:
        return max((abs(float(v)) for v in self.values), default=0.0)


def kernel_check(tau: Form, functions: Sequence, tol_zero: float = 1e-7,
                 tol_witness: float = 1e-3) -> KernelReport:
    """Forward and contrapositive probes of the kernel description.

    If rumin_d(tau) vanishes identically and the zero-section integral is
    zero, every battery evaluation must be zero to tolerance; if the operator
    does not vanish, some battery function must witness a nonzero value.
    """
    D = rumin_d(tau)
    i0 = float(integrate_zero_section(tau))
    val = Valuation(tau)
    values = [float(evaluate(val, f).value) for f in functions]
    scale = scale_of(values)
    if D.is_zero():
        if abs(i0) <= tol_zero:
            passed = all(abs(v) <= tol_zero * scale for v in values)
            return KernelReport("kernel", values, scale, tol_zero, passed,
                                zero_section_integral=i0)
        passed = all(abs(v - i0) <= tol_zero * scale_of(values + [i0])
                     for v in values)
        return KernelReport("constant", values, scale, tol_zero, passed,
                            zero_section_integral=i0)
    witness = None
    for f, v in zip(functions, values):
        if abs(v) > tol_witness * scale:
            witness = (f.describe(), v)
            break
    return KernelReport("nonkernel", values, scale, tol_witness,
                        witness is not None, witness=witness,
                        zero_section_integral=i0)


# -- homogeneity ----------------------------------------------------------------------


@dataclass
class HomogeneityFit:
    coefficients: list
    residual: float
    values: list
    scale: float

    def dominant_degree(self) -> int:
        return int(np.argmax(np.abs(self.coefficients)))


def homogeneity_fit(val: Valuation, f: ConvexFunction,
                    t_grid: Optional[Sequence[float]] = None) -> HomogeneityFit:
    """Least-squares polynomial fit of t -> mu(t f), degree <= n."""
    n = val.n
    if t_grid is None:
        t_grid = [Q(k, 2) for k in range(1, n + 4)]
    if len(t_grid) < n + 2:
        raise ValueError("need at least n + 2 grid points")
    values = [float(evaluate(val, Scaled(f, t)).value) for t in t_grid]
    V = np.vander([float(t) for t in t_grid], n + 1, increasing=True)
    coeffs, res, *_ = np.linalg.lstsq(V, np.asarray(values), rcond=None)
    fitted = V @ coeffs
    residual = float(np.abs(fitted - values).max())
    return HomogeneityFit(coeffs.tolist(), residual, values, scale_of(values))


# -- first variation -----------------------------------------------------------------


@dataclass
class FirstVariationReport:
    directional: float
    fd_values: dict
    extrapolated: float
    order: float
    residual: float
    scale: float


def first_variation_check(val: Valuation, f: ConvexFunction, psi: SmoothField,
                          ts: Sequence[float] = (1e-2, 1e-3),
                          spec: Optional[QuadratureSpec] = None) -> FirstVariationReport:
    """Central differences of t -> mu(f + t psi) against D(f)[psi ^ rumin(tau)].

    The same quadrature nodes evaluate every perturbed function, so the
    finite differences do not amplify quadrature error.  Adaptive quadrature
    is the default: a bump-type psi puts Hessian layers at its own support
    sphere, in the interior of the integration box.
    """
    tau = val.tau
    n = val.n
    rhs_form = val.rumin.D_bar.map_coefficients(lambda c: c * psi.coeff)
    box = tau.support_box()
    boxes = _split_at_support(box, psi.coeff.support_box()) if n == 1 else [box]
    if spec is None and n > 1 and psi.coeff.has_bump():
        # interior Hessian layers at the perturbation's support sphere
        spec = QuadratureSpec(mode="adaptive", order=24, refine_order=32,
                              tol=1e-9, max_depth=10)
    spec = spec or default_spec(n)

    def mu(g, form):
        return sum(float(eval_smooth(g, form, spec=spec, box=b).value)
                   for b in boxes)

    rhs = mu(f, rhs_form)
    t1, t2 = (float(t) for t in ts)
    tm = math.sqrt(t1 * t2)  # auxiliary geometric step for the order estimate
    window = max(t1, t2, tm) * 1.05
    fd = {}
    first = True
    for t in (t1, tm, t2):
        up = Perturbed(f, psi, t, window=window, box=box, check=first)
        dn = Perturbed(f, psi, -t, window=window, box=box, check=False)
        fd[t] = (mu(up, tau) - mu(dn, tau)) / (2 * t)
        first = False
    scale = scale_of([rhs] + list(fd.values()))
    # order from successive differences: shared quadrature bias cancels
    d1, d2 = abs(fd[t1] - fd[tm]), abs(fd[tm] - fd[t2])
    if min(d1, d2) <= 1e-10 * scale:
        order = 2.0  # the truncation term sits below quadrature noise
    else:
        order = math.log(d1 / d2) / math.log(t1 / tm)
    extrap = (t1 ** 2 * fd[t2] - t2 ** 2 * fd[t1]) / (t1 ** 2 - t2 ** 2)
    return FirstVariationReport(rhs, fd, extrap, order, abs(extrap - rhs), scale)


# -- k = 1 representation ---------------------------------------------------------------


def _split_at_support(box, inner) -> list:
    """Cut a 1D box at the boundary points of an inner support box.

    Bump perturbations are flat to all orders at their support sphere but
    carry boundary layers just inside it; cutting there lets fixed
    Gauss-Legendre panels resolve the layers at their endpoints.
    """
    (lo, hi), = box
    cuts = {lo, hi}
    if inner is not None:
        for c in inner[0]:
            if lo < c < hi:
                cuts.add(c)
    pts = sorted(cuts)
    return [((a, b),) for a, b in zip(pts, pts[1:])]


def k1_representation(val: Valuation) -> CoefficientFn:
    """The density phi with mu(f) = int f phi when rumin(tau) = phi vol_x."""
    D = val.rumin.D_bar
    n = val.n
    vol_key = tuple(range(n))
    for key, c in D.terms.items():
        if key != vol_key:
            raise ValueError("operator output is not a multiple of the base volume")
        if c.depends_on_y():
            raise ValueError("density depends on the fiber; not 1-homogeneous")
    return D.terms.get(vol_key, CoefficientFn.zero(n))


def integral_against_density(f: ConvexFunction, phi: CoefficientFn,
                             spec: Optional[QuadratureSpec] = None) -> float:
    box = phi.support_box()
    if box is None:
        raise ValueError("density needs a support box")
    spec = spec or default_spec(phi.n)

    def fn(pts):
        return f.eval_array(pts) * phi.eval_x_array(pts)

    v, _ = integrate_box(fn, box, spec)
    return v


# -- mixed discriminants and Hessian valuations -------------------------------------------


def mixed_discriminant(matrices: Sequence) -> Fraction | float:
    """Full polarization of det on an n-tuple of symmetric n x n matrices.

    D(A_1..A_n) = (1/n!) sum_{S nonempty} (-1)^{n-|S|} det(sum_{i in S} A_i);
    exact over Fractions, float otherwise.
    """
    n = len(matrices)
    exact = all(isinstance(matrices[i][p][q], (int, Fraction))
                for i in range(n) for p in range(n) for q in range(n))
    total: Fraction | float = Q(0) if exact else 0.0
    for r in range(1, n + 1):
        for S in combinations(range(n), r):
            if exact:
                M = [[sum(_as_fraction(matrices[i][p][q]) for i in S)
                      for q in range(n)] for p in range(n)]
                from .rumin import _fraction_det

                det = _fraction_det(M)
            else:
                M = sum(np.asarray(matrices[i], dtype=float) for i in S)
                det = float(np.linalg.det(M))
            total = total + ((-1) ** (n - r)) * det
    fact = math.factorial(n)
    return total / fact


@dataclass
class MixedDiscriminantSpec:
    """Data of a Hessian valuation: B(x) det(D^2 f [k], A_1, ..., A_{n-k})."""

    n: int
    k: int
    B: CoefficientFn
    A: list  # constant symmetric matrices with rational entries

    def __post_init__(self):
        if not (0 <= self.k <= self.n):
            raise ValueError("homogeneity degree out of range")
        if len(self.A) != self.n - self.k:
            raise ValueError("need n - k constant matrices")
        self.A = [[[_as_fraction(row[q]) for q in range(self.n)]
                   for row in m] for m in self.A]
        for m in self.A:
            for p in range(self.n):
                for q in range(self.n):
                    if m[p][q] != m[q][p]:
                        raise ValueError("matrices must be symmetric")


def hessian_valuation(spec: MixedDiscriminantSpec, f: ConvexFunction,
                      quad: Optional[QuadratureSpec] = None) -> float:
    """Quadrature of B(x) det(D^2 f(x)[k], A_1..A_{n-k}) over B's support."""
    n, k = spec.n, spec.k
    box = spec.B.support_box()
    if box is None:
        raise ValueError("weight needs a support box")
    quad = quad or default_spec(n)
    A_float = [np.asarray([[float(v) for v in row] for row in m]) for m in spec.A]

    def fn(pts):
        H = f.hessian_array(pts)
        N = pts.shape[0]
        total = np.zeros(N)
        mats = [H] * k + [np.broadcast_to(a, (N, n, n)) for a in A_float]
        for r in range(1, n + 1):
            for S in combinations(range(n), r):
                M = sum(mats[i] for i in S)
                total += ((-1) ** (n - r)) * np.linalg.det(M)
        return spec.B.eval_x_array(pts) * total / math.factorial(n)

    v, _ = integrate_box(fn, box, quad)
    return v


def hessian_form(spec: MixedDiscriminantSpec) -> Form:
    """The vertically invariant (n-k, k) form whose graph pullback is the
    Hessian-valuation integrand; solved from the symbolic identity
    pullback = B det(H[k], A_1..A_{n-k}) vol for a symbolic Hessian H."""
    n, k = spec.n, spec.k
    nh = n * (n + 1) // 2
    idx = {}
    c = 0
    for p in range(n):
        for q in range(p, n):
            idx[(p, q)] = c
            idx[(q, p)] = c
            c += 1

    def hvar(p, q):
        return Poly.variable(nh, idx[(p, q)])

    Hsym = [[hvar(p, q) for q in range(n)] for p in range(n)]
    Amats = [[[Poly.const(nh, v) for v in row] for row in m] for m in spec.A]
    target = _poly_mixed_discriminant([Hsym] * k + Amats)

    # basis of candidate monomials dx_I ^ dy_J of bidegree (n-k, k)
    pairs = []
    cols = []
    for I in combinations(range(n), n - k):
        Ic = [v for v in range(n) if v not in I]
        sign, _ = merge_sign(tuple(I), tuple(Ic))
        for J in combinations(range(n), k):
            pb = _poly_minor(Hsym, list(J), Ic) * Q(sign)
            pairs.append((I, J))
            cols.append(pb)

    monomials = sorted(set().union(*[set(p.terms) for p in cols + [target]]))
    rows = [[col.terms.get(m, Q(0)) for col in cols] for m in monomials]
    rhs = [target.terms.get(m, Q(0)) for m in monomials]
    sol = _solve_exact(rows, rhs)
    if sol is None:
        raise AssertionError("mixed-discriminant expansion is not representable")
    # symbolic verification of the postcondition
    check = Poly.zero(nh)
    for coef, col in zip(sol, cols):
        check = check + col.scale(coef)
    if check != target:
        raise AssertionError("symbolic pullback identity failed")

    terms = {}
    for coef, (I, J) in zip(sol, pairs):
        if coef == 0:
            continue
        key = tuple(I) + tuple(n + j for j in J)
        c = spec.B.scale(coef)
        terms[key] = terms[key] + c if key in terms else c
    return Form(n, n, terms)


def _poly_mixed_discriminant(mats: list) -> Poly:
    """Symbolic polarization of det over matrices with Poly entries."""
    n = len(mats)
    nh = mats[0][0][0].nvars
    total = Poly.zero(nh)
    for r in range(1, n + 1):
        for S in combinations(range(n), r):
            M = [[Poly.zero(nh) for _ in range(n)] for _ in range(n)]
            for i in S:
                for p in range(n):
                    for q in range(n):
                        M[p][q] = M[p][q] + mats[i][p][q]
            total = total + _poly_det(M).scale((-1) ** (n - r))
    return total.scale(Q(1, math.factorial(n)))


def _poly_det(M: list) -> Poly:
    from itertools import permutations

    n = len(M)
    nh = M[0][0].nvars
    out = Poly.zero(nh)
    for perm in permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = Poly.const(nh, sign)
        for i in range(n):
            term = term * M[i][perm[i]]
        out = out + term
    return out


def _poly_minor(H: list, rows: list, cols: list) -> Poly:
    sub = [[H[r][c] for c in cols] for r in rows]
    if not sub:
        return Poly.const(H[0][0].nvars, 1)
    return _poly_det(sub)


def _solve_exact(rows: list, rhs: list) -> Optional[list]:
    """Exact solve of an overdetermined consistent system; free vars -> 0."""
    m = len(rows)
    if m == 0:
        return []
    ncols = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    row = 0
    for col in range(ncols):
        piv = next((s for s in range(row, m) if aug[s][col] != 0), None)
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        pv = aug[row][col]
        aug[row] = [v / pv for v in aug[row]]
        for s in range(m):
            if s != row and aug[s][col] != 0:
                f = aug[s][col]
                aug[s] = [v - f * w for v, w in zip(aug[s], aug[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    for s in range(row, m):
        if aug[s][ncols] != 0:
            return None
    sol = [Q(0)] * ncols
    for r, col in enumerate(pivots):
        sol[col] = aug[r][ncols]
    return sol


# -- group averaging and rigidity ------------------------------------------------------


def check_orthogonal(g) -> None:
    n = len(g)
    G = [[_as_fraction(g[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            s = sum(G[k][i] * G[k][j] for k in range(n))
            if s != (1 if i == j else 0):
                raise ValueError("group averaging requires exactly orthogonal matrices")


def group_average(tau: Form, gs: Sequence) -> Form:
    """(1/N) sum over g of sign(det g) pullback(lift(g^{-1}), tau)."""
    from .rumin import _det_sign, _mat_inv_list

    n = tau.n
    acc = None
    for g in gs:
        check_orthogonal(g)
        sgn = _det_sign(g, n)
        ginv = _mat_inv_list(g, n)
        piece = pullback(linear_lift(n, ginv), tau).scale(sgn)
        acc = piece if acc is None else acc + piece
    return acc.scale(Q(1, len(gs)))


def rotation_2d(t: Fraction):
    """Exactly orthogonal rational rotation from the tangent half-angle t."""
    t = _as_fraction(t)
    d = 1 + t * t
    return [[(1 - t * t) / d, -2 * t / d], [2 * t / d, (1 - t * t) / d]]


def sampled_rotations_2d(N: int = 64, denom: int = 2 ** 20) -> list:
    """Near-equispaced rotations, each exactly orthogonal with det 1."""
    out = []
    for j in range(N):
        theta = math.pi * (2 * j + 1 - N) / N
        t = Fraction(round(math.tan(theta / 2) * denom), denom)
        out.append(rotation_2d(t))
    return out


def rotation_3d_from_quaternion(a, b, c, d):
    a, b, c, d = (_as_fraction(v) for v in (a, b, c, d))
    s = a * a + b * b + c * c + d * d
    if s == 0:
        raise ValueError("zero quaternion")
    return [
        [(a * a + b * b - c * c - d * d) / s, 2 * (b * c - a * d) / s, 2 * (b * d + a * c) / s],
        [2 * (b * c + a * d) / s, (a * a - b * b + c * c - d * d) / s, 2 * (c * d - a * b) / s],
        [2 * (b * d - a * c) / s, 2 * (c * d + a * b) / s, (a * a - b * b - c * c + d * d) / s],
    ]


def octahedral_rotations() -> list:
    """The 24 integer rotation matrices of the octahedral group."""
    from itertools import permutations, product

    out = []
    for perm in permutations(range(3)):
        for signs in product((1, -1), repeat=3):
            M = [[Q(0)] * 3 for _ in range(3)]
            for i, (p, s) in enumerate(zip(perm, signs)):
                M[i][p] = Q(s)
            from .rumin import _fraction_det

            if _fraction_det([row[:] for row in M]) == 1:
                out.append(M)
    return out


def sampled_rotations_3d(N: int = 40, seed: int = 11) -> list:
    """Octahedral subgroup plus random rational-quaternion rotations."""
    rng = np.random.default_rng(seed)
    out = octahedral_rotations()
    while len(out) < N:
        q = [int(v) for v in rng.integers(-9, 10, size=4)]
        if all(v == 0 for v in q):
            continue
        out.append(rotation_3d_from_quaternion(*q))
    return out[:N]


@dataclass
class RigidityReport:
    radii: list
    variations: list
    scale: float
    tolerance: float
    passed: bool
    note: str = ("probe runs on form-represented valuations only; the sampled "
                 "group stands in for a transitive compact subgroup")


def rigidity_probe_1hom(val: Valuation, radii: Sequence[float] = (0.5, 1.0, 1.5),
                        n_dirs: int = 48, tol: float = 1e-4,
                        seed: int = 5) -> RigidityReport:
    """Angular variation of the k = 1 density on sampled spheres.

    For a rotation-invariant valuation the density must be radial; the
    variation is measured against max(1, sup |phi|) over the samples.
    """
    phi = k1_representation(val)
    n = val.n
    rng = np.random.default_rng(seed)
    if n == 2:
        thetas = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
        dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    else:
        dirs = rng.normal(size=(n_dirs, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    variations = []
    allvals = []
    for r in radii:
        vals = phi.eval_x_array(dirs * float(r))
        variations.append(float(vals.max() - vals.min()))
        allvals.extend(vals.tolist())
    scale = scale_of(allvals)
    passed = all(v <= tol * scale for v in variations)
    return RigidityReport(list(radii), variations, scale, tol, passed)
