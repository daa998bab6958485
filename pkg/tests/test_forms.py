from fractions import Fraction as Q

import numpy as np
import pytest

from cycleval.coefficients import BumpFactor, CoefficientFn, ball_bump
from cycleval.forms import (
    DegreeError,
    Form,
    PolynomialMap,
    SymplecticData,
    exterior_derivative,
    fiber_scaling,
    integrate_zero_section,
    interior_product,
    lefschetz_L,
    lefschetz_L_inverse,
    linear_lift,
    merge_sign,
    primitive_check,
    pullback,
    standard_symplectic_form,
    tautological_one_form,
    vertical_translation,
    wedge,
    zero_section_coefficient,
)
from cycleval.polynomials import Poly


def dx(n, i, coeff=1):
    return Form.monomial(n, [i], [], coeff)


def dy(n, j, coeff=1):
    return Form.monomial(n, [], [j], coeff)


def var_x(n, i):
    return Poly.variable(2 * n, i - 1)


def var_y(n, j):
    return Poly.variable(2 * n, n + j - 1)


def test_symplectic_data_constructs_for_all_dims():
    for n in (1, 2, 3, 4):
        sd = SymplecticData(n)
        assert sd.alpha.degree == 1 and sd.omega_s.degree == 2
    with pytest.raises(Exception):
        SymplecticData(5)  # dimension capped by configuration


def test_merge_sign_basic():
    assert merge_sign((0,), (1,)) == (1, (0, 1))
    assert merge_sign((1,), (0,)) == (-1, (0, 1))
    assert merge_sign((0,), (0,)) == (0, None)


def test_wedge_anticommutes():
    n = 2
    a = dx(n, 1)
    b = dy(n, 1)
    assert wedge(a, b) == Form.monomial(n, [1], [1], 1)
    assert wedge(b, a) == Form.monomial(n, [1], [1], -1)
    xdx = Form.monomial(n, [1], [], Poly.variable(2 * n, 0))
    assert wedge(xdx, xdx).is_zero()


def test_exterior_derivative_examples():
    n = 1
    # d(y1 dx1) = -dx1^dy1
    a = Form.monomial(n, [1], [], var_y(n, 1))
    da = exterior_derivative(a)
    assert da == Form.monomial(n, [1], [1], -1)
    # d(alpha) = -omega_s
    sd = SymplecticData(2)
    assert exterior_derivative(sd.alpha) == -sd.omega_s
    # product rule: d(x1 y1 dx2) = y1 dx1^dx2 + x1 dy1^dx2
    n = 2
    b = Form.monomial(n, [2], [], var_x(n, 1) * var_y(n, 1))
    db = exterior_derivative(b)
    expected = (Form.monomial(n, [1, 2], [], var_y(n, 1))
                + Form.monomial(n, [2], [1], -var_x(n, 1)))
    assert db == expected


def test_d_squared_zero_randomized():
    rng = np.random.default_rng(7)
    for n in (1, 2, 3):
        for deg in range(0, 2 * n - 1):
            for _ in range(10):
                a = _random_poly_form(rng, n, deg)
                assert exterior_derivative(exterior_derivative(a)).is_zero()


def _random_poly_form(rng, n, deg, nterms=2, bump=False):
    from cycleval.forms import _subsets
    keys = _subsets(range(2 * n), deg)
    terms = {}
    for _ in range(nterms):
        key = keys[rng.integers(len(keys))]
        nv = 2 * n
        p = Poly.zero(nv)
        for _ in range(2):
            e = [0] * nv
            e[rng.integers(nv)] = rng.integers(0, 3)
            p = p + Poly.monomial(nv, e, Q(int(rng.integers(-4, 5)), int(rng.integers(1, 4))))
        c = CoefficientFn.bump(n, ball_bump(n, 2), p) if bump else CoefficientFn.from_poly(n, p)
        if key in terms:
            terms[key] = terms[key] + c
        else:
            terms[key] = c
    return Form(n, deg, terms)


def test_leibniz_randomized():
    rng = np.random.default_rng(11)
    for n in (1, 2):
        for dega in range(0, 2):
            for degb in range(0, 2):
                a = _random_poly_form(rng, n, dega)
                b = _random_poly_form(rng, n, degb)
                lhs = exterior_derivative(wedge(a, b))
                rhs = wedge(exterior_derivative(a), b) + wedge(a, exterior_derivative(b)).scale((-1) ** dega)
                assert lhs == rhs


def test_d_squared_on_bump_coefficients():
    rng = np.random.default_rng(3)
    for n in (1, 2):
        a = _random_poly_form(rng, n, 1, bump=True)
        assert exterior_derivative(exterior_derivative(a)).is_zero()


def test_interior_product_examples():
    n = 1
    omega = standard_symplectic_form(n)
    # i_{d/dy1} omega_s = -dx1
    X = [Poly.zero(2 * n), Poly.const(2 * n, 1)]
    assert interior_product(X, omega) == dx(n, 1, -1)
    # X = (0, grad psi): i_X alpha = 0 and i_X omega_s = -sum psi_i dx_i
    n = 2
    psi_grad = [var_x(n, 1) * 2, var_y := Poly.const(2 * n, 3)]  # gradient of x1^2 + 3 x2
    X = [Poly.zero(2 * n), Poly.zero(2 * n), psi_grad[0], psi_grad[1]]
    alpha = tautological_one_form(n)
    assert interior_product(X, alpha).is_zero()
    got = interior_product(X, standard_symplectic_form(n))
    expected = (Form.monomial(n, [1], [], psi_grad[0]) + Form.monomial(n, [2], [], psi_grad[1])).scale(-1)
    assert got == expected


def test_pullback_examples():
    # m_t^* omega_s = t omega_s with symbolic t
    n = 2
    mt = fiber_scaling(n)
    t = Poly.variable(2 * n + 1, 2 * n)
    got = pullback(mt, standard_symplectic_form(n))
    expected = Form(n, 2, {(i, n + i): CoefficientFn.from_poly(n, t) for i in range(n)})
    assert got == expected
    # phi_lambda^* alpha = alpha + sum lambda_i dx_i
    phi = vertical_translation(n)
    alpha = tautological_one_form(n)
    got = pullback(phi, alpha)
    lam = [Poly.variable(3 * n, 2 * n + i) for i in range(n)]
    expected = Form(n, 1, {(i,): CoefficientFn.from_poly(n, Poly.variable(3 * n, n + i) + lam[i])
                           for i in range(n)})
    assert got == expected
    # identity pullback
    rng = np.random.default_rng(5)
    a = _random_poly_form(rng, 2, 2)
    assert pullback(PolynomialMap.identity(2), a) == a


def test_cartan_identity_exact():
    # d i_X + i_X d equals the t-derivative at 0 of the pullback along the
    # time-t flow, for fields X = (0, A x + b) whose flow is polynomial
    rng = np.random.default_rng(19)
    n = 2
    A = [[Q(1), Q(-2)], [Q(0), Q(3)]]
    b = [Q(1, 2), Q(-1)]
    X = [Poly.zero(2 * n), Poly.zero(2 * n),
         Poly.variable(2 * n, 0) - Poly.variable(2 * n, 1).scale(2) + Poly.const(2 * n, Q(1, 2)),
         Poly.variable(2 * n, 1).scale(3) - Poly.const(2 * n, 1)]
    # flow: (x, y) -> (x, y + t (A x + b)); carry t as a parameter
    nv = 2 * n + 1
    t = Poly.variable(nv, 2 * n)
    comps = [Poly.variable(nv, v) for v in range(2 * n)]
    for i in range(2):
        shift = Poly.zero(nv)
        for j in range(2):
            shift = shift + Poly.variable(nv, j).scale(A[i][j])
        shift = shift + Poly.const(nv, b[i])
        comps[n + i] = comps[n + i] + shift * t
    flow = PolynomialMap(n, comps)
    for deg in (1, 2):
        for _ in range(5):
            a = _random_poly_form(rng, n, deg)
            cartan = exterior_derivative(interior_product(X, a)) \
                + interior_product(X, exterior_derivative(a))
            lie = pullback(flow, a).map_coefficients(lambda c: _t_derivative(c, 2 * n))
            assert cartan == lie


def _t_derivative(c, slot):
    # coefficient of t^1, i.e. d/dt at t = 0
    from cycleval.coefficients import CoefficientFn

    out = {}
    for sig, poly in c.atoms.items():
        terms = {}
        for e, v in poly.terms.items():
            if len(e) > slot and e[slot] == 1:
                e2 = list(e)
                e2[slot] = 0
                terms[tuple(e2)] = v
        if terms:
            out[sig] = Poly(poly.nvars, terms)
    return CoefficientFn(c.n, out, declared_box=c.declared_box)


def test_zero_section_fixed_by_fiber_scaling():
    from cycleval.coefficients import ball_bump

    n = 2
    c = CoefficientFn.bump(n, ball_bump(n, 1),
                           Poly.const(4, 1) + Poly.variable(4, n))
    tau = Form(n, n, {(0, 1): c})
    base = integrate_zero_section(tau)
    for t in (Q(1, 2), Q(3)):
        pulled = pullback(fiber_scaling(n, t), tau)
        assert integrate_zero_section(pulled) == pytest.approx(base, abs=1e-10)


def test_pullback_functorial_and_commutes_with_d():
    rng = np.random.default_rng(13)
    n = 2
    g = linear_lift(n, [[1, 2], [0, 1]])
    h = linear_lift(n, [[0, -1], [1, 0]])
    a = _random_poly_form(rng, n, 2)
    assert pullback(h, pullback(g, a)) == pullback(g.compose(h), a)
    assert exterior_derivative(pullback(g, a)) == pullback(g, exterior_derivative(a))


def test_lefschetz_examples():
    n = 2
    # L(1) = omega_s
    one = Form.constant(n, 1)
    assert lefschetz_L(one) == standard_symplectic_form(n)
    # L(dx1) = dx1^dx2^dy2 for n = 2
    got = lefschetz_L(dx(n, 1))
    assert got == Form.monomial(n, [1, 2], [2], 1)
    # round trips
    rng = np.random.default_rng(2)
    for n in (1, 2, 3):
        xi = _random_poly_form(rng, n, n - 1)
        assert lefschetz_L_inverse(lefschetz_L(xi)) == xi
        eta = _random_poly_form(rng, n, n + 1)
        assert lefschetz_L(lefschetz_L_inverse(eta)) == eta
    # n=2: L^{-1}(dx1^dx2^dy2) = dx1
    assert lefschetz_L_inverse(Form.monomial(2, [1, 2], [2], 1)) == dx(2, 1)
    with pytest.raises(DegreeError):
        lefschetz_L_inverse(dx(2, 1))


def test_primitive_check():
    n = 2
    assert primitive_check(Form.monomial(n, [1, 2], [], 1))  # dx1^dx2
    assert primitive_check(Form.monomial(n, [], [1, 2], 1))  # dy1^dy2
    assert not primitive_check(standard_symplectic_form(n))
    n = 3
    assert primitive_check(Form.monomial(n, [1, 2, 3], [], 1))


def test_integrate_zero_section():
    n = 2
    bump = ball_bump(n, 1)
    beta = CoefficientFn.bump(n, bump)
    vol = Form(n, n, {(0, 1): beta})
    val, err = integrate_zero_section(vol, with_error=True)
    # cross-check against a tensor quadrature oracle at a different order
    from scipy.integrate import dblquad

    ref, _ = dblquad(
        lambda y, x: float(np.exp(1 - 1 / (1 - x * x - y * y))) if x * x + y * y < 1 else 0.0,
        -1, 1, lambda x: -1, lambda x: 1, epsabs=1e-12)
    assert abs(val - ref) < 1e-8
    # coefficient vanishing at y = 0
    ycoeff = CoefficientFn.bump(n, bump, Poly.variable(2 * n, n))
    assert integrate_zero_section(Form(n, n, {(0, 1): ycoeff})) == 0
    # no (full x, empty y) term at all
    mixed = Form.monomial(n, [1], [1], beta)
    assert integrate_zero_section(mixed) == 0
    # polynomial with declared window integrates exactly
    c = CoefficientFn.from_poly(n, Poly.variable(2 * n, 0) ** 2,
                                box=((Q(-1), Q(1)), (Q(0), Q(2))))
    exact = integrate_zero_section(Form(n, n, {(0, 1): c}))
    assert exact == Q(4, 3)


def test_zero_section_coefficient_restricts_y():
    n = 1
    c = CoefficientFn.from_poly(n, Poly.variable(2, 1), box=((Q(-1), Q(1)),))
    form = Form(n, 1, {(0,): c})
    assert zero_section_coefficient(form).is_zero()
