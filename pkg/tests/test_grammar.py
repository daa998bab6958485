from fractions import Fraction as Q

import numpy as np
import pytest

from cycleval.coefficients import CoefficientFn, ball_bump
from cycleval.convex import LogSumExp, MaxAffine, PiecewiseLinear1D, Quadratic, Shifted
from cycleval.forms import Form
from cycleval.grammar import (
    ParseError,
    parse_body,
    parse_form,
    parse_function,
    parse_value,
    serialize_form,
)
from cycleval.lab import random_bump_form
from cycleval.polynomials import Poly


def test_parse_value():
    assert parse_value("3/2") == Q(3, 2)
    assert parse_value("[1, -2/3]") == [Q(1), Q(-2, 3)]
    assert parse_value("[[1,0],[0,1]]") == [[Q(1), Q(0)], [Q(0), Q(1)]]


def test_parse_simple_forms():
    n = 2
    f = parse_form("3/2 * x1^2 * y2 * dx1^dy2", n)
    expected = Form.monomial(n, [1], [2],
                             Poly(4, {(2, 0, 0, 1): Q(3, 2)}))
    assert f == expected
    g = parse_form("bump(R=2) * x1 * dx1^dx2", n)
    expected_g = Form(n, 2, {(0, 1): CoefficientFn.bump(
        n, ball_bump(n, 2), Poly.variable(4, 0))})
    assert g == expected_g
    h = parse_form("dy1^dx1", n)
    assert h == Form.monomial(n, [1], [1], -1)


def test_parse_sums_and_signs():
    n = 1
    f = parse_form("2*dx1 - 3*dy1 + 1/2 * x1 * dy1", n)
    assert f.coefficient([1], []) == CoefficientFn.from_poly(1, Poly.const(2, 2))
    expected_dy = Poly.const(2, -3) + Poly.variable(2, 0).scale(Q(1, 2))
    assert f.coefficient([], [1]) == CoefficientFn.from_poly(1, expected_dy)


def test_box_window():
    n = 1
    f = parse_form("box(-2,2) * x1 * dx1", n)
    c = f.coefficient([1], [])
    assert c.declared_box == ((Q(-2), Q(2)),)
    g = parse_form("box(3) * dx1", n)
    assert g.coefficient([1], []).declared_box == ((Q(-3), Q(3)),)


def test_roundtrip_random_forms():
    rng = np.random.default_rng(8)
    for n in (1, 2):
        for _ in range(6):
            form = random_bump_form(rng, n, degree=rng.integers(0, 2 * n + 1))
            text = serialize_form(form)
            again = parse_form(text, n)
            assert again == form
            assert serialize_form(again) == text


def test_roundtrip_derivative_forms():
    # derivatives introduce bump powers and denominators; they must survive
    from cycleval.forms import exterior_derivative

    n = 1
    tau = Form(n, 1, {(1,): CoefficientFn.bump(n, ball_bump(n, 2),
                                               Poly.variable(2, 0) ** 2)})
    d = exterior_derivative(tau)
    text = serialize_form(d)
    assert parse_form(text, n) == d


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_form("dx3", 2)
    with pytest.raises(ParseError):
        parse_form("wibble * dx1", 1)
    with pytest.raises(ParseError):
        parse_form("bump() * dx1", 1)


def test_parse_functions():
    f = parse_function("quadratic A=[[2,0],[0,1]] b=[0,0] c=0", 2)
    assert isinstance(f, Quadratic)
    g = parse_function("maxaffine pieces=[[[1,0],0],[[-1,0],0]]", 2)
    assert isinstance(g, MaxAffine) and g.m == 2
    h = parse_function("lse pieces=[[[1],0],[[-1],0]] beta=50", 1)
    assert isinstance(h, LogSumExp) and h.beta == 50.0
    s = parse_function("quadratic A=[[1]] shift=[1] shiftc=2", 1)
    assert isinstance(s, Shifted)
    p = parse_function("pwl breaks=[0] slopes=[-1,1] v0=0", 1)
    assert isinstance(p, PiecewiseLinear1D)
    d = parse_function({"kind": "quadratic", "A": [[1]]}, 1)
    assert isinstance(d, Quadratic)


def test_parse_bodies():
    b = parse_body("ellipsoid M=[[1,0],[0,1]]", 1)
    assert b.n_ambient == 2
    p = parse_body("point p=[1,0,0]", 2)
    assert p.n_ambient == 3
    s = parse_body("smoothbox a=[1,1] eps=1/5", 1)
    assert s.eps == pytest.approx(0.2)
