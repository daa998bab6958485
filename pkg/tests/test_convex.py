from fractions import Fraction as Q

import numpy as np
import pytest

from cycleval.convex import (
    BodyRestriction,
    CatalogError,
    EllipsoidBody,
    LogSumExp,
    MaxAffine,
    NonsmoothPointError,
    Perturbed,
    PiecewiseLinear1D,
    PointBody,
    Quadratic,
    Scaled,
    Shifted,
    SmoothCatalog,
    SmoothedBoxBody,
    SmoothField,
    as_max_affine,
    body_restriction,
    legendre,
    lipschitz_bound,
    smooth_approximation,
)
from cycleval.coefficients import CoefficientFn, ball_bump

RNG = np.random.default_rng(42)

def _rand_psd(rng, n, lam_min=0.3):
    G = rng.normal(size=(n, n))
    A = G @ G.T + lam_min * np.eye(n)
    return np.round(A, 3)

def _fd_gradient(f, x, h=1e-4):
    n = len(x)
    g = np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[i] = (f.eval(x + e) - f.eval(x - e)) / (2 * h)
    return g

def _fd_hessian(f, x, h=1e-4):
    n = len(x)
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        H[i] = (f.gradient(x + e) - f.gradient(x - e)) / (2 * h)
    return 0.5 * (H + H.T)

SMOOTH_SAMPLES = []
for n in (1, 2, 3):
    SMOOTH_SAMPLES.append(Quadratic(_rand_psd(RNG, n), RNG.normal(size=n).round(2), 0.5))
    SMOOTH_SAMPLES.append(SmoothCatalog("sqrt1p", n))
    SMOOTH_SAMPLES.append(SmoothCatalog("quartic", n))
    ma = MaxAffine([(RNG.integers(-2, 3, size=n).tolist(), round(float(RNG.normal()), 2))
                    for _ in range(4)])
    SMOOTH_SAMPLES.append(LogSumExp(ma, 8.0))
SMOOTH_SAMPLES.append(BodyRestriction(EllipsoidBody(_rand_psd(RNG, 3, 0.5))))
SMOOTH_SAMPLES.append(BodyRestriction(PointBody([0.7, -0.3, 1.1])))
SMOOTH_SAMPLES.append(BodyRestriction(SmoothedBoxBody([1.0, 1.5, 0.7], eps=0.2)))

@pytest.mark.parametrize("f", SMOOTH_SAMPLES, ids=lambda f: f.describe())
def test_gradients_match_finite_differences(f):
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = rng.uniform(-1.5, 1.5, size=f.n)
        g = f.gradient(x)
        g_fd = _fd_gradient(f, x)
        scale = max(1.0, np.abs(g).max())
        assert np.abs(g - g_fd).max() < 1e-5 * scale
        H = f.hessian(x)
        H_fd = _fd_hessian(f, x)
        hscale = max(1.0, np.abs(H).max())
        assert np.abs(H - H_fd).max() < 1e-3 * hscale
        # convexity spot-check
        assert np.linalg.eigvalsh(H).min() >= -1e-10

@pytest.mark.parametrize("f", SMOOTH_SAMPLES, ids=lambda f: f.describe())
def test_sup_bound_dominates_samples(f):
    rng = np.random.default_rng(11)
    rho = 2.0
    X = rng.uniform(-1, 1, size=(64, f.n))
    X = X / np.maximum(1.0, np.linalg.norm(X, axis=1) / rho)[:, None]
    bound = f.sup_abs_bound(rho)
    assert (np.abs(f.eval_array(X)) <= bound + 1e-9).all()

def test_quadratic_basic():
    f = Quadratic(np.eye(2))
    x = np.array([1.0, 2.0])
    assert f.eval(x) == pytest.approx(2.5)
    assert np.allclose(f.gradient(x), x)
    assert np.allclose(f.hessian(x), np.eye(2))
    with pytest.raises(CatalogError):
        Quadratic([[-1.0]])

def test_shifted_and_scaled():
    f = Quadratic(np.eye(2))
    g = Shifted(f, [1, -1], 3)
    x = np.array([0.5, 0.5])
    assert g.eval(x) == pytest.approx(f.eval(x) + 0.5 - 0.5 + 3)
    h = Scaled(f, Q(3, 2))
    assert h.eval(x) == pytest.approx(1.5 * f.eval(x))
    z = Scaled(f, 0)
    assert z.eval(x) == 0.0 and z.smooth

def test_legendre_involution_exact():
    A = [[2, 1], [1, 3]]
    f = Quadratic(A, [1, -2], Q(1, 4))
    g = legendre(legendre(f))
    assert g.A == f.A and g.b == f.b and g.c == f.c
    # self-dual case
    h = Quadratic([[1]])
    assert legendre(h).A == h.A
    # numeric cross-check against a grid supremum of <y,x> - f(x)
    y = np.array([0.3, -0.7])
    xs = np.stack(np.meshgrid(np.linspace(-6, 6, 601), np.linspace(-6, 6, 601),
                              indexing="ij"), axis=-1).reshape(-1, 2)
    brute = (xs @ y - f.eval_array(xs)).max()
    assert legendre(f).eval(y) == pytest.approx(brute, abs=1e-3)

def test_lipschitz_bound_examples():
    # f = |x|^2/2, R = 1: 2 sup_{|x|<=2} |f| = 4
    f = Quadratic([[1]])
    assert lipschitz_bound(f, 1.0) == pytest.approx(4.0, abs=1e-9)
    # bound dominates sampled difference quotients
    rng = np.random.default_rng(8)
    for g in (f, MaxAffine([([1], 0), ([-1], 0)]), SmoothCatalog("quartic", 2)):
        R = 1.5
        L = lipschitz_bound(g, R)
        U = rng.uniform(-R, R, size=(40, g.n))
        V = rng.uniform(-R, R, size=(40, g.n))
        keep = (np.linalg.norm(U, axis=1) <= R) & (np.linalg.norm(V, axis=1) <= R)
        num = np.abs(g.eval_array(U[keep]) - g.eval_array(V[keep]))
        den = np.linalg.norm(U[keep] - V[keep], axis=1)
        assert (num <= L * den + 1e-9).all()

def test_max_affine_dedup_prune():
    f = MaxAffine([([1], 0), ([1], -1), ([-1], 0), ([0], -5)])
    # duplicate gradient keeps the larger offset; dominated flat piece pruned
    assert f.m == 2
    with pytest.raises(NonsmoothPointError):
        f.gradient(np.zeros(1))
    g = MaxAffine([([1, 0], 0), ([-1, 0], 0), ([0, 1], 0), ([0, -1], 0), ([0, 0], -1)])
    assert g.m == 4  # the constant piece is dominated

def test_lse_sandwich():
    rng = np.random.default_rng(4)
    base = MaxAffine([([1, 0], 0), ([-1, 1], 0.5), ([0, -1], -0.5)])
    for beta in (10.0, 100.0):
        lse = smooth_approximation(base, beta)
        X = rng.uniform(-3, 3, size=(128, 2))
        gap = lse.eval_array(X) - base.eval_array(X)
        assert (gap >= -1e-12).all()
        assert (gap <= np.log(base.m) / beta + 1e-12).all()
    # single piece: smoothing is exact
    single = MaxAffine([([2, -1], 1)])
    lse1 = smooth_approximation(single, 5.0)
    X = rng.uniform(-2, 2, size=(16, 2))
    assert np.allclose(lse1.eval_array(X), single.eval_array(X))

def test_lse_gradient_is_softmax_combination():
    base = MaxAffine([([1, 0], 0), ([0, 1], 0), ([-1, -1], 0.2)])
    lse = LogSumExp(base, 6.0)
    x = np.array([0.3, -0.2])
    g = lse.gradient(x)
    hull = base._af
    # gradient lies in the convex hull of the piece gradients

    assert g[0] >= hull[:, 0].min() - 1e-12 and g[0] <= hull[:, 0].max() + 1e-12
    assert g[1] >= hull[:, 1].min() - 1e-12 and g[1] <= hull[:, 1].max() + 1e-12

def test_perturbed_window_checked():
    f = Quadratic(np.eye(1))
    psi = SmoothField(CoefficientFn.bump(1, ball_bump(1, 2)))
    p = Perturbed(f, psi, 0.05, window=0.05, box=[(-3, 3)])
    x = np.array([0.3])
    assert p.eval(x) == pytest.approx(f.eval(x) + 0.05 * psi.eval_array(x[None, :])[0])
    with pytest.raises(CatalogError):
        Perturbed(f, psi, 5.0, window=5.0, box=[(-3, 3)])  # destroys convexity

def test_body_restrictions():
    # unit ball: f_K = sqrt(1 + |x|^2)
    ball = EllipsoidBody(np.eye(3))
    f = body_restriction(ball)
    x = np.array([0.5, -1.0])
    assert f.eval(x) == pytest.approx(np.sqrt(1 + 1.25))
    ref = SmoothCatalog("sqrt1p", 2)
    assert np.allclose(f.gradient(x), ref.gradient(x))
    assert np.allclose(f.hessian(x), ref.hessian(x), atol=1e-10)
    # point body: affine restriction
    p = PointBody([2.0, -1.0, 0.5])
    fp = body_restriction(p)
    assert fp.eval(x) == pytest.approx(2.0 * 0.5 + 1.0 - 0.5)
    assert np.allclose(fp.hessian(x), 0.0)
    # ellipsoid: f_K(x) = sqrt((x,-1)^T M (x,-1))
    M = _rand_psd(np.random.default_rng(2), 3, 0.5)
    fe = body_restriction(EllipsoidBody(M))
    u = np.array([0.3, 0.7, -1.0])
    assert fe.eval(u[:2]) == pytest.approx(np.sqrt(u @ M @ u))

def test_pwl_from_max_affine_and_lattice():
    f = PiecewiseLinear1D.from_max_affine(MaxAffine([([1], 0), ([-1], 0)]))
    assert f.breaks == [0] and f.slopes == [-1, 1]
    assert f.eval_exact(Q(3, 2)) == Q(3, 2)
    assert f.eval_exact(-2) == 2
    g = PiecewiseLinear1D([Q(1, 2)], [Q(0), Q(2)], Q(1))
    mx = f.maximum(g)
    mn = f.minimum(g)
    for x in (Q(-3), Q(-1, 2), Q(0), Q(1, 2), Q(3, 4), Q(2), Q(7)):
        vf, vg = f.eval_exact(x), g.eval_exact(x)
        assert mx.eval_exact(x) == max(vf, vg)
        assert mn.eval_exact(x) == min(vf, vg)
    # valuation identity of values
    for x in (Q(-1), Q(1, 3), Q(5, 2)):
        assert (mx.eval_exact(x) + mn.eval_exact(x)
                == f.eval_exact(x) + g.eval_exact(x))

def test_as_max_affine_unwraps():
    f = MaxAffine([([1, 1], 0), ([-1, 0], Q(1, 2))])
    g = Shifted(Scaled(f, Q(2)), [1, -1], Q(3))
    ma = as_max_affine(g)
    assert ma is not None
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(32, 2))
    assert np.allclose(ma.eval_array(X), g.eval_array(X))
    assert as_max_affine(Quadratic(np.eye(2))) is None
