"""Exact exterior algebra on T*R^n with coordinates (x_1..x_n, y_1..y_n).

Monomials are stored as ``coeff * dx_I ^ dy_J`` with both index sets
ascending and all dx factors before all dy factors; every operation
normalises to this order with the Koszul sign, so equality of forms is a
dictionary comparison of exact coefficients.

Generator codes: ``dx_i -> i - 1`` and ``dy_j -> n + j - 1`` (0-based
internally, 1-based in the public (I, J) helpers).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .coefficients import BoxT, CoefficientFn, SupportError, _box_union
from .polynomials import Poly, Q, _as_fraction
from .quadrature import QuadratureSpec, default_spec, integrate_box

MAX_DIMENSION = 4  # basis matrices for the Lefschetz inverse stay tiny

Key = tuple  # tuple[int, ...], strictly increasing generator codes


class DimensionMismatch(ValueError):
    pass


class DegreeError(ValueError):
    pass


def merge_sign(a: Key, b: Key) -> tuple[int, Optional[Key]]:
    """Koszul sign for e_a ^ e_b -> e_{sorted(a+b)}; 0 when indices repeat."""
    if set(a) & set(b):
        return 0, None
    inversions = 0
    for x in b:
        inversions += sum(1 for y in a if y > x)
    merged = tuple(sorted(a + b))
    return (-1) ** (inversions % 2), merged


class Form:
    """Homogeneous-degree differential form with exact coefficients."""

    __slots__ = ("n", "degree", "terms")

    def __init__(self, n: int, degree: int, terms=None):
        if not (1 <= n <= MAX_DIMENSION):
            raise DimensionMismatch(f"dimension must be in 1..{MAX_DIMENSION}")
        if not (0 <= degree <= 2 * n):
            raise DegreeError("degree out of range")
        self.n = n
        self.degree = degree
        clean: dict[Key, CoefficientFn] = {}
        if terms:
            for key, c in (terms.items() if isinstance(terms, dict) else terms):
                key = tuple(key)
                if len(key) != degree or list(key) != sorted(set(key)):
                    raise ValueError(f"bad monomial key {key} for degree {degree}")
                if any(not 0 <= v < 2 * n for v in key):
                    raise ValueError("generator code out of range")
                if c.is_zero():
                    continue
                clean[key] = clean[key] + c if key in clean else c
                if clean[key].is_zero():
                    del clean[key]
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n: int, degree: int = 0) -> "Form":
        return cls(n, degree)

    @classmethod
    def from_coefficient(cls, n: int, c: CoefficientFn) -> "Form":
        return cls(n, 0, {(): c})

    @classmethod
    def constant(cls, n: int, c) -> "Form":
        return cls.from_coefficient(n, CoefficientFn.constant(n, c))

    @classmethod
    def monomial(cls, n: int, I: Sequence[int], J: Sequence[int],
                 coeff: CoefficientFn | Poly | int | Fraction = 1,
                 box: Optional[BoxT] = None) -> "Form":
        """Build ``coeff * dx_I ^ dy_J`` from 1-based index sets."""
        key = key_from_ij(n, I, J)
        if isinstance(coeff, CoefficientFn):
            c = coeff
        elif isinstance(coeff, Poly):
            c = CoefficientFn.from_poly(n, coeff, box=box)
        else:
            c = CoefficientFn.from_poly(n, Poly.const(2 * n, coeff), box=box)
        return cls(n, len(key), {key: c})

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        if self.n != other.n:
            return False
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if not self.terms:
            return f"Form(n={self.n}, 0)"
        bits = []
        for key in sorted(self.terms):
            gens = "^".join(_gen_name(v, self.n) for v in key) or "1"
            bits.append(f"({self.terms[key]!r}) {gens}")
        return f"Form(n={self.n}, " + " + ".join(bits) + ")"

    def coefficient(self, I: Sequence[int], J: Sequence[int]) -> CoefficientFn:
        key = key_from_ij(self.n, I, J)
        return self.terms.get(key, CoefficientFn.zero(self.n))

    def bidegrees(self) -> set[tuple[int, int]]:
        """Set of (|I|, |J|) pairs present."""
        n = self.n
        return {(sum(1 for v in k if v < n), sum(1 for v in k if v >= n)) for k in self.terms}

    def depends_on_y(self) -> bool:
        return any(c.depends_on_y() for c in self.terms.values())

    def support_box(self) -> Optional[BoxT]:
        box = None
        known = False
        for c in self.terms.values():
            b = c.support_box()
            if b is None:
                return None
            box = _box_union(box, b)
            known = True
        return box if known else tuple((Q(0), Q(0)) for _ in range(self.n))

    # -- linear structure -----------------------------------------------------

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise DegreeError("cannot add forms of different degree")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return Form(self.n, self.degree, out)

    def __neg__(self) -> "Form":
        return Form(self.n, self.degree, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        return Form(self.n, self.degree, {k: v.scale(c) for k, v in self.terms.items()})

    def map_coefficients(self, fn) -> "Form":
        return Form(self.n, self.degree, {k: fn(c) for k, c in self.terms.items()})

    def _check(self, other: "Form"):
        if self.n != other.n:
            raise DimensionMismatch("forms live on different cotangent spaces")


def key_from_ij(n: int, I: Sequence[int], J: Sequence[int]) -> Key:
    I = sorted(I)
    J = sorted(J)
    if I and not (1 <= I[0] and I[-1] <= n) or J and not (1 <= J[0] and J[-1] <= n):
        raise ValueError("indices are 1-based and bounded by n")
    return tuple(i - 1 for i in I) + tuple(n + j - 1 for j in J)


def ij_from_key(n: int, key: Key) -> tuple[tuple, tuple]:
    I = tuple(v + 1 for v in key if v < n)
    J = tuple(v - n + 1 for v in key if v >= n)
    return I, J


def _gen_name(v: int, n: int) -> str:
    return f"dx{v + 1}" if v < n else f"dy{v - n + 1}"


# -- core operations ----------------------------------------------------------


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; bilinear, associative, Koszul signs on sorted keys."""
    if a.n != b.n:
        raise DimensionMismatch("wedge of forms on different spaces")
    deg = a.degree + b.degree
    if deg > 2 * a.n:
        return Form.zero(a.n, 2 * a.n)
    out: dict[Key, CoefficientFn] = {}
    for k1, c1 in a.terms.items():
        for k2, c2 in b.terms.items():
            s, key = merge_sign(k1, k2)
            if s == 0:
                continue
            c = (c1 * c2).scale(s)
            out[key] = out[key] + c if key in out else c
    return Form(a.n, deg, out)


def exterior_derivative(a: Form) -> Form:
    """d, acting on coefficients by exact partial differentiation."""
    n = a.n
    if a.degree >= 2 * n:
        return Form.zero(n, 2 * n)
    out: dict[Key, CoefficientFn] = {}
    for key, c in a.terms.items():
        for v in range(2 * n):
            dc = c.diff(v)
            if dc.is_zero():
                continue
            s, newkey = merge_sign((v,), key)
            if s == 0:
                continue
            dc = dc.scale(s)
            out[newkey] = out[newkey] + dc if newkey in out else dc
    return Form(n, a.degree + 1, out)


def interior_product(X: Sequence[Poly], a: Form) -> Form:
    """Contraction with a vector field given by 2n polynomial components."""
    n = a.n
    if a.degree < 1:
        raise DegreeError("interior product needs degree >= 1")
    if len(X) != 2 * n:
        raise DimensionMismatch("vector field needs 2n components")
    out: dict[Key, CoefficientFn] = {}
    for key, c in a.terms.items():
        for pos, v in enumerate(key):
            comp = X[v]
            if comp.is_zero():
                continue
            part = (c * comp).scale((-1) ** pos)
            newkey = key[:pos] + key[pos + 1:]
            out[newkey] = out[newkey] + part if newkey in out else part
    return Form(n, a.degree - 1, out)


class PolynomialMap:
    """Polynomial self-map of T*R^n, possibly carrying symbolic parameters.

    ``components[k]`` is the k-th target coordinate as a polynomial in the
    source variables; slots beyond 2n are parameters (never differentiated).
    """

    __slots__ = ("n", "components")

    def __init__(self, n: int, components: Sequence[Poly]):
        if len(components) != 2 * n:
            raise DimensionMismatch("need 2n components")
        self.n = n
        m = max(p.nvars for p in components)
        self.components = [p.extend(m) for p in components]

    @classmethod
    def identity(cls, n: int) -> "PolynomialMap":
        return cls(n, [Poly.variable(2 * n, v) for v in range(2 * n)])

    def jacobian_entry(self, k: int, v: int) -> Poly:
        return self.components[k].diff(v)

    def compose(self, other: "PolynomialMap") -> "PolynomialMap":
        """self after other, i.e. w -> self(other(w))."""
        m = max(self.components[0].nvars, other.components[0].nvars)
        repl = [c.extend(m) for c in other.components]
        repl += [Poly.variable(m, v) for v in range(2 * self.n, m)]
        return PolynomialMap(self.n, [c.extend(m).subs(repl) for c in self.components])


def pullback(F: PolynomialMap, a: Form) -> Form:
    """Pullback along F; an algebra homomorphism commuting with d."""
    n = a.n
    if F.n != n:
        raise DimensionMismatch("map and form dimension differ")
    out: dict[Key, CoefficientFn] = {}
    jac_cache: dict[int, list[tuple[int, Poly]]] = {}

    def dF(k: int) -> list[tuple[int, Poly]]:
        if k not in jac_cache:
            jac_cache[k] = [(v, F.jacobian_entry(k, v)) for v in range(2 * n)
                            if F.jacobian_entry(k, v)]
        return jac_cache[k]

    for key, c in a.terms.items():
        comp = c.subs_linear(F.components)
        # expand dF_{k1} ^ ... ^ dF_{kp} over monomial keys
        partial: dict[Key, Poly] = {(): Poly.const(comp.nvars(), 1)}
        for k in key:
            nxt: dict[Key, Poly] = {}
            for pkey, pval in partial.items():
                for v, dv in dF(k):
                    s, mkey = merge_sign(pkey, (v,))
                    if s == 0:
                        continue
                    add = pval * dv * Q(s)
                    if mkey in nxt:
                        nxt[mkey] = nxt[mkey] + add
                    else:
                        nxt[mkey] = add
            partial = {k2: v2 for k2, v2 in nxt.items() if not v2.is_zero()}
        for mkey, pval in partial.items():
            term = comp * pval
            if term.is_zero():
                continue
            out[mkey] = out[mkey] + term if mkey in out else term
    return Form(n, a.degree, out)


# -- canonical symplectic objects ----------------------------------------------


def tautological_one_form(n: int) -> Form:
    """alpha = sum_i y_i dx_i."""
    terms = {}
    for i in range(n):
        terms[(i,)] = CoefficientFn.from_poly(n, Poly.variable(2 * n, n + i))
    return Form(n, 1, terms)


def standard_symplectic_form(n: int) -> Form:
    """omega_s = sum_i dx_i ^ dy_i."""
    terms = {}
    for i in range(n):
        terms[(i, n + i)] = CoefficientFn.constant(n, 1)
    return Form(n, 2, terms)


class SymplecticData:
    """alpha and omega_s with their defining identities checked exactly."""

    __slots__ = ("n", "alpha", "omega_s")

    def __init__(self, n: int):
        self.n = n
        self.alpha = tautological_one_form(n)
        self.omega_s = standard_symplectic_form(n)
        if exterior_derivative(self.alpha) != -self.omega_s:
            raise AssertionError("omega_s != -d(alpha)")
        top = self.omega_s
        for _ in range(n - 1):
            top = wedge(top, self.omega_s)
        expect = _top_volume(n)
        if top != expect:
            raise AssertionError("omega_s^n != n! dx_1^dy_1^...^dx_n^dy_n")


def _top_volume(n: int) -> Form:
    # n! * dx_1^dy_1^...^dx_n^dy_n reordered into the canonical key
    sign = 1
    key: Key = ()
    for i in range(n):
        s1, key = merge_sign(key, (i,))
        s2, key = merge_sign(key, (n + i,))
        sign *= s1 * s2
    fact = 1
    for i in range(2, n + 1):
        fact *= i
    return Form(n, 2 * n, {key: CoefficientFn.constant(n, sign * fact)})


# -- standard maps ----------------------------------------------------------------


def vertical_translation(n: int, lam: Optional[Sequence] = None) -> PolynomialMap:
    """(x, y) -> (x, y + lambda); symbolic lambda in slots 2n..3n-1 if omitted."""
    nv = 2 * n if lam is not None else 3 * n
    comps = [Poly.variable(nv, v) for v in range(2 * n)]
    for i in range(n):
        shift = (Poly.const(nv, _as_fraction(lam[i])) if lam is not None
                 else Poly.variable(nv, 2 * n + i))
        comps[n + i] = comps[n + i] + shift
    return PolynomialMap(n, comps)


def fiber_scaling(n: int, t=None) -> PolynomialMap:
    """(x, y) -> (x, t y); symbolic t in slot 2n if omitted."""
    nv = 2 * n if t is not None else 2 * n + 1
    comps = [Poly.variable(nv, v) for v in range(2 * n)]
    factor = Poly.const(nv, _as_fraction(t)) if t is not None else Poly.variable(nv, 2 * n)
    for i in range(n):
        comps[n + i] = comps[n + i] * factor
    return PolynomialMap(n, comps)


def linear_lift(n: int, g: Sequence[Sequence]) -> PolynomialMap:
    """Lift of x -> g x to T*R^n, (x, y) -> (g x, g^{-T} y); needs g invertible."""
    G = tuple(tuple(_as_fraction(g[i][j]) for j in range(n)) for i in range(n))
    from .coefficients import _mat_inverse
    Ginv = _mat_inverse(G)  # raises on singular g
    nv = 2 * n
    comps = []
    for i in range(n):
        comps.append(Poly(nv, {tuple(1 if v == j else 0 for v in range(nv)): G[i][j]
                               for j in range(n) if G[i][j]}))
    for i in range(n):
        # (g^{-T} y)_i = sum_j Ginv[j][i] y_j
        comps.append(Poly(nv, {tuple(1 if v == n + j else 0 for v in range(nv)): Ginv[j][i]
                               for j in range(n) if Ginv[j][i]}))
    return PolynomialMap(n, comps)


def gradient_shear(n: int, A: Sequence[Sequence], b: Sequence) -> PolynomialMap:
    """(x, y) -> (x, y + A x + b): adds the differential of a quadratic."""
    nv = 2 * n
    comps = [Poly.variable(nv, v) for v in range(2 * n)]
    for i in range(n):
        extra = Poly.const(nv, _as_fraction(b[i]))
        for j in range(n):
            aij = _as_fraction(A[i][j])
            if aij:
                extra = extra + Poly.variable(nv, j).scale(aij)
        comps[n + i] = comps[n + i] + extra
    return PolynomialMap(n, comps)


# -- Lefschetz operator ----------------------------------------------------------


def lefschetz_L(a: Form) -> Form:
    """L(a) = omega_s ^ a."""
    return wedge(standard_symplectic_form(a.n), a)


_LEF_CACHE: dict[int, tuple[list[Key], list[Key], list[list[Fraction]]]] = {}


def _subsets(vals, k):
    out = [()]
    for _ in range(k):
        out = [s + (v,) for s in out for v in vals if not s or v > s[-1]]
    return out


def _lefschetz_inverse_matrix(n: int):
    """Inverse of the basis matrix of L: Lambda^{n-1} -> Lambda^{n+1}."""
    if n in _LEF_CACHE:
        return _LEF_CACHE[n]
    src = _subsets(range(2 * n), n - 1)
    dst = _subsets(range(2 * n), n + 1)
    dst_index = {k: i for i, k in enumerate(dst)}
    m = len(src)
    if len(dst) != m:
        raise AssertionError("Lefschetz basis sizes differ")
    # column j: L(e_{src[j]})
    mat = [[Q(0)] * m for _ in range(m)]
    for j, key in enumerate(src):
        for i in range(n):
            s, merged = merge_sign((i, n + i), key)
            if s == 0:
                continue
            mat[dst_index[merged]][j] += s
    inv = _invert_fraction_matrix(mat)
    _LEF_CACHE[n] = (src, dst, inv)
    return _LEF_CACHE[n]


def _invert_fraction_matrix(mat):
    m = len(mat)
    a = [[Q(v) for v in row] + [Q(1) if k == i else Q(0) for k in range(m)]
         for i, row in enumerate(mat)]
    for col in range(m):
        piv = next((r for r in range(col, m) if a[r][col] != 0), None)
        if piv is None:
            raise AssertionError("Lefschetz matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        a[col] = [v / pv for v in a[col]]
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [[a[i][m + j] for j in range(m)] for i in range(m)]


def lefschetz_L_inverse(a: Form) -> Form:
    """Unique (n-1)-form xi with omega_s ^ xi = a; needs deg a = n + 1."""
    n = a.n
    if a.degree != n + 1:
        raise DegreeError("Lefschetz inverse needs degree n+1")
    src, dst, inv = _lefschetz_inverse_matrix(n)
    dst_index = {k: i for i, k in enumerate(dst)}
    cols: dict[int, CoefficientFn] = {}
    for key, c in a.terms.items():
        cols[dst_index[key]] = c
    out: dict[Key, CoefficientFn] = {}
    for j, key in enumerate(src):
        acc = None
        for i, c in cols.items():
            w = inv[j][i]
            if w == 0:
                continue
            piece = c.scale(w)
            acc = piece if acc is None else acc + piece
        if acc is not None and not acc.is_zero():
            out[key] = acc
    return Form(n, n - 1, out)


def primitive_check(a: Form) -> bool:
    """True iff L^{n-k+1}(a) = 0 exactly (k = deg a <= n)."""
    n, k = a.n, a.degree
    if k > n:
        raise DegreeError("primitivity is defined for degree <= n")
    out = a
    for _ in range(n - k + 1):
        out = lefschetz_L(out)
    return out.is_zero()


# -- zero-section integration --------------------------------------------------------


def zero_section_coefficient(a: Form) -> CoefficientFn:
    """Restriction to the zero section: the (full x, empty y) coefficient at y = 0."""
    n = a.n
    if a.degree != n:
        raise DegreeError("zero-section integration needs an n-form")
    key = tuple(range(n))
    return a.terms.get(key, CoefficientFn.zero(n)).restrict_y_zero()


def integrate_zero_section(a: Form, spec: Optional[QuadratureSpec] = None,
                           with_error: bool = False):
    """Integral over the zero section V -> T*V.

    Exact (a Fraction) for polynomial atoms with a declared window; tensor
    quadrature with a reported error estimate for bump atoms.
    """
    if spec is None:
        spec = default_spec(a.n)
    c = zero_section_coefficient(a)
    total_exact = Q(0)
    total_float = 0.0
    err = 0.0
    inexact = False
    for sig, poly in c.atoms.items():
        part = CoefficientFn(c.n, {sig: poly}, declared_box=c.declared_box)
        if not sig:
            if c.declared_box is None:
                raise SupportError("polynomial coefficient needs a declared support box")
            if poly.nvars > 2 * c.n and any(any(e[2 * c.n:]) for e in poly.terms):
                raise SupportError("cannot integrate a coefficient with free parameters")
            val = poly.integrate_box(c.declared_box, list(range(c.n)))
            total_exact += val.eval_point([Q(0)] * val.nvars)
        else:
            if part.integral_vanishes_by_parity():
                continue
            box = part.support_box()
            v, e = integrate_box(lambda p: part.eval_x_array(p), box, spec)
            total_float += v
            err += e
            inexact = True
    if inexact:
        value: Fraction | float = float(total_exact) + total_float
    else:
        value = total_exact
    return (value, err) if with_error else value
