import math
from fractions import Fraction as Q

import numpy as np
import pytest

from cycleval.coefficients import CoefficientFn, ball_bump
from cycleval.convex import (
    MaxAffine,
    PiecewiseLinear1D,
    Quadratic,
    SmoothCatalog,
)
from cycleval.cycles import (
    build_1d,
    eval_polyline,
    eval_smooth,
    mass_polyline,
    mass_smooth,
    transform_identity_residual,
)
from cycleval.forms import Form, exterior_derivative, standard_symplectic_form, wedge
from cycleval.polynomials import Poly


def beta_coeff(n, R=1, poly=None):
    return CoefficientFn.bump(n, ball_bump(n, R), poly)


def test_defining_property_identity_hessian():
    # f = |x|^2/2: pullback of beta(x) dy1^...^dyn is beta(x) dx (Hessian = I)
    for n in (1, 2):
        f = Quadratic(np.eye(n))
        tau_dy = Form.monomial(n, [], list(range(1, n + 1)), beta_coeff(n))
        tau_dx = Form.monomial(n, list(range(1, n + 1)), [], beta_coeff(n))
        v1 = eval_smooth(f, tau_dy)
        v2 = eval_smooth(f, tau_dx)
        assert v1.value == pytest.approx(v2.value, abs=1e-10)
        # n = 1 oracle: int beta
        if n == 1:
            from scipy.integrate import quad

            ref, _ = quad(lambda x: math.exp(1 - 1 / (1 - x * x)) if abs(x) < 1 else 0.0,
                          -1, 1, epsabs=1e-13)
            assert v1.value == pytest.approx(ref, abs=1e-9)


def test_defining_property_vs_direct_quadrature():
    # tau = phi(x, y) pi^* vol evaluates to int phi(x, grad f)
    n = 2
    f = Quadratic([[2.0, 0.5], [0.5, 1.0]], [0.1, -0.2], 0.0)
    phi = beta_coeff(n, R=2, poly=Poly.variable(4, 2) ** 2)  # y1^2 * bump(x)
    tau = Form(n, n, {(0, 1): phi})
    got = eval_smooth(f, tau)
    from cycleval.quadrature import box_nodes

    pts, wts = box_nodes([(-2, 2), (-2, 2)], 160)
    grad = f.gradient_array(pts)
    full = np.concatenate([pts, grad], axis=1)
    ref = float(np.dot(wts, phi.eval_array(full)))
    assert got.value == pytest.approx(ref, rel=1e-8)


def test_smooth_closedness_and_lagrangian():
    rng = np.random.default_rng(3)
    n = 2
    f = SmoothCatalog("sqrt1p", n)
    # D(f)[d rho] ~ 0 for bump-coefficient 1-forms rho
    for _ in range(3):
        p = Poly.monomial(4, (rng.integers(0, 2), rng.integers(0, 2),
                              rng.integers(0, 2), 0), Q(int(rng.integers(1, 4)), 2))
        rho = Form.monomial(n, [int(rng.integers(1, 3))], [], beta_coeff(n, 2, p))
        val = eval_smooth(f, exterior_derivative(rho))
        assert abs(val.value) < 1e-8
    # D(f)[omega_s ^ xi] ~ 0
    xi = Form.from_coefficient(n, beta_coeff(n, 2, Poly.variable(4, 1)))
    val = eval_smooth(f, wedge(standard_symplectic_form(n), xi))
    assert abs(val.value) < 1e-8


def test_polyline_absolute_value():
    # D(|x|)[phi dy] = 2 phi(0), exact
    f = PiecewiseLinear1D.from_max_affine(MaxAffine([([1], 0), ([-1], 0)]))
    cyc = build_1d(f)
    phi = Poly.const(2, Q(3, 7)) + Poly.variable(2, 0) ** 2  # 3/7 + x^2
    tau = Form.monomial(1, [], [1], CoefficientFn.from_poly(1, phi, box=((Q(-1), Q(1)),)))
    assert eval_polyline(cyc, tau) == 2 * Q(3, 7)
    # horizontal form: vertical segment contributes nothing; int phi over window
    tau_dx = Form.monomial(1, [1], [], CoefficientFn.from_poly(1, phi, box=((Q(-1), Q(1)),)))
    assert eval_polyline(cyc, tau_dx) == 2 * Q(3, 7) + Q(2, 3)


def test_polyline_concave_kink_sign():
    # f = -|x|: downward vertical segment, D(f)[phi dy] = -2 phi(0)
    f = PiecewiseLinear1D([Q(0)], [Q(1), Q(-1)], Q(0))
    cyc = build_1d(f)
    phi = Poly.const(2, 1)
    tau = Form.monomial(1, [], [1], CoefficientFn.from_poly(1, phi, box=((Q(-2), Q(2)),)))
    assert eval_polyline(cyc, tau) == -2
    # affine: single horizontal line, no kinks
    aff = PiecewiseLinear1D([], [Q(2)], Q(1))
    assert eval_polyline(build_1d(aff), tau) == 0


def test_valuation_property_exact_1d():
    rng = np.random.default_rng(17)
    for _ in range(25):
        f = _random_pwl(rng)
        g = _random_pwl(rng)
        fg_max = f.maximum(g)
        fg_min = f.minimum(g)
        tau = _random_window_form(rng)
        vf = eval_polyline(build_1d(f), tau)
        vg = eval_polyline(build_1d(g), tau)
        vmax = eval_polyline(build_1d(fg_max), tau)
        vmin = eval_polyline(build_1d(fg_min), tau)
        assert vf + vg == vmax + vmin


def _random_pwl(rng):
    k = int(rng.integers(0, 4))
    breaks = sorted(set(Q(int(rng.integers(-8, 9)), 4) for _ in range(k)))
    slopes = [Q(int(rng.integers(-6, 7)), 2) for _ in range(len(breaks) + 1)]
    return PiecewiseLinear1D(breaks, slopes, Q(int(rng.integers(-4, 5)), 2))


def _random_window_form(rng):
    box = ((Q(-3), Q(3)),)
    px = Poly(2, {(int(rng.integers(0, 3)), int(rng.integers(0, 2))):
                  Q(int(rng.integers(-6, 7)), 3)})
    py = Poly(2, {(int(rng.integers(0, 2)), int(rng.integers(0, 3))):
                  Q(int(rng.integers(-6, 7)), 3)})
    return Form(1, 1, {(0,): CoefficientFn.from_poly(1, px, box=box),
                       (1,): CoefficientFn.from_poly(1, py, box=box)})


def test_mass_values():
    # affine: flat graph over the ball has mass omega_n R^n
    for n, omega in ((1, 2.0), (2, math.pi)):
        f = Quadratic(np.zeros((n, n)), [0.3] * n, 1.0)
        for R in (1.0, 2.0):
            assert mass_smooth(f, R) == pytest.approx(omega * R ** n, rel=1e-8)
    # n = 1, f = x^2/2: mass over U_1 is the length of the diagonal, 2 sqrt 2
    f = Quadratic([[1]])
    assert mass_smooth(f, 1.0) == pytest.approx(2 * math.sqrt(2), rel=1e-10)
    # polyline mass: |x| over U_1: two horizontal pieces + vertical segment
    cyc = build_1d(MaxAffine([([1], 0), ([-1], 0)]))
    assert mass_polyline(cyc, 1.0) == pytest.approx(2.0 + 2.0)


def test_transform_identities():
    n = 2
    f = Quadratic([[1.5, 0.2], [0.2, 1.0]])
    tau = Form(n, n, {(0, 1): beta_coeff(n, Q(3, 2)),
                      (0, 2): beta_coeff(n, Q(3, 2), Poly.variable(4, 1)),
                      (2, 3): beta_coeff(n, Q(3, 2))})
    # adding a C^{1,1} quadratic
    res = transform_identity_residual(f, tau, ("add_quadratic",
                                               [[0.5, 0.0], [0.0, 0.25]], [0.1, -0.3]))
    assert res < 1e-8
    # coordinate swap: det = -1
    res = transform_identity_residual(f, tau, ("linear", [[0, 1], [1, 0]]))
    assert res < 1e-8
    # shear: the pulled-back bump acquires an ellipsoidal support
    res = transform_identity_residual(f, tau, ("linear", [[1, 1], [0, 1]]))
    assert res < 1e-6
    # fiber scaling c = 2
    res = transform_identity_residual(f, tau, ("scale", 2))
    assert res < 1e-8


def test_lse_consistency_converges():
    # eval_smooth(LSE_beta(f)) approaches the exact polyhedral value
    from cycleval.convex import LogSumExp
    from cycleval.polyhedral import build_polyhedral, eval_polyhedral, window_for

    n = 1
    ma = MaxAffine([([1], 0), ([-1], 0), ([2], -1)])
    tau = Form.monomial(n, [], [1],
                        CoefficientFn.from_poly(n, Poly.const(2, 1) + Poly.variable(2, 0),
                                                box=((Q(-2), Q(2)),)))
    cyc = build_polyhedral(ma, window=window_for(ma, tau.support_box()))
    exact = float(eval_polyhedral(cyc, tau))
    from cycleval.cycles import eval_smooth_ridge_aligned

    gaps = []
    for beta in (10.0, 100.0, 1000.0):
        approx = eval_smooth_ridge_aligned(LogSumExp(ma, beta), ma, tau,
                                           layer=50.0 / beta, order=32, refine=44)
        gaps.append(abs(approx.value - exact))
    assert gaps[0] > gaps[1]
    assert gaps[2] < 1e-4
    assert gaps[2] < gaps[0]
