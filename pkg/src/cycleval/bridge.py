"""Conormal cycles of smooth bodies and the bridge to function valuations.

A convex body K in R^{n+1} with smooth support function h has conormal cycle
(d'h x Id)_*[S(R^{n+1})].  Composing with the fiberwise-projective map
(y, s, (x, t)) -> (-x/t, y) on the lower hemisphere carries that cycle onto
the differential cycle of f_K = h(., -1).  The evaluator below integrates a
pulled-back form through that chain (hemisphere chart, support-function
oracles on the sphere, projective map), an arithmetic path disjoint from the
gradient-graph quadrature of f_K, so agreement of the two numbers is a
genuine cross-validation.

Orientation: the chart domain carries the standard orientation; the sign is
pinned by the unit-ball / constant-volume-form case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import SupportError
from .convex import ConvexBody, body_restriction
from .cycles import EvalResult, eval_smooth
from .forms import Form
from .lab import Valuation, evaluate
from .quadrature import QuadratureSpec, default_spec


@dataclass
class SphereChart:
    """Parametrization z -> (z, -1)/sqrt(1+|z|^2) of the lower hemisphere.

    Inverse of the projective embedding of R^n into S(R^{n+1}); covers
    exactly the open lower hemisphere.
    """

    n: int

    def point(self, Z: np.ndarray) -> np.ndarray:
        w = np.sqrt(1.0 + (Z * Z).sum(axis=1))
        U = np.empty((Z.shape[0], self.n + 1))
        U[:, :self.n] = Z / w[:, None]
        U[:, self.n] = -1.0 / w
        return U

    def jacobian(self, Z: np.ndarray) -> np.ndarray:
        """dU/dz of shape (N, n+1, n)."""
        N, n = Z.shape
        w = np.sqrt(1.0 + (Z * Z).sum(axis=1))
        J = np.empty((N, n + 1, n))
        eye = np.eye(n)
        J[:, :n, :] = eye[None, :, :] / w[:, None, None] \
            - np.einsum("ni,nj->nij", Z, Z) / (w ** 3)[:, None, None]
        J[:, n, :] = Z / (w ** 3)[:, None]
        return J

    def volume_factor(self, Z: np.ndarray) -> np.ndarray:
        """sqrt(det(J^T J)): the spherical area element in the chart."""
        w2 = 1.0 + (Z * Z).sum(axis=1)
        return w2 ** (-(self.n + 1) / 2.0)


@dataclass
class QMapData:
    """(y, s, (x, t)) -> (-x/t, y), defined for t < 0, with its Jacobian
    assembled along the chart chain."""

    n: int

    def project(self, U: np.ndarray) -> np.ndarray:
        """The base component -x/t for sphere points (x, t)."""
        return -U[:, :self.n] / U[:, self.n:self.n + 1]

    def project_jacobian(self, U: np.ndarray, dU: np.ndarray) -> np.ndarray:
        """d(-x/t)/dz by the quotient rule, shape (N, n, n)."""
        n = self.n
        t = U[:, n]
        x = U[:, :n]
        dt = dU[:, n, :]
        dx = dU[:, :n, :]
        return -(dx * t[:, None, None]
                 - np.einsum("ni,nj->nij", x, dt)) / (t ** 2)[:, None, None]


def conormal_eval(K: ConvexBody, tau: Form,
                  spec: Optional[QuadratureSpec] = None,
                  box=None) -> EvalResult:
    """Integral of the pullback of tau over CNC(K) restricted to the lower
    hemisphere, computed in the hemisphere chart."""
    n = tau.n
    if K.n_ambient != n + 1:
        raise ValueError("body must live in R^{n+1}")
    if tau.degree != n:
        raise ValueError("expected an n-form on T*R^n")
    box = box or tau.support_box()
    if box is None:
        raise SupportError("form needs horizontally compact (or windowed) support")
    spec = spec or default_spec(n)
    chart = SphereChart(n)
    qmap = QMapData(n)

    terms = []
    for key, coeff in tau.terms.items():
        if coeff.has_params():
            raise SupportError("cannot evaluate a form with free parameters")
        I = [v for v in key if v < n]
        J = [v - n for v in key if v >= n]
        terms.append((coeff, I, J))

    def integrand(Z: np.ndarray) -> np.ndarray:
        U = chart.point(Z)
        dU = chart.jacobian(Z)
        X = qmap.project(U)
        dX = qmap.project_jacobian(U, dU)
        grad = K.grad_h_array(U)
        hess = K.hess_h_array(U)
        Y = grad[:, :n]
        dY = np.einsum("nab,nbj->naj", hess, dU)[:, :n, :]
        pts = np.concatenate([X, Y], axis=1)
        out = np.zeros(Z.shape[0])
        for coeff, I, J in terms:
            rows = [dX[:, i, :] for i in I] + [dY[:, j, :] for j in J]
            M = np.stack(rows, axis=1)
            out += coeff.eval_array(pts) * np.linalg.det(M)
        return out

    from .quadrature import integrate_box

    v, e = integrate_box(integrand, box, spec)
    return EvalResult(v, e)


@dataclass
class BridgeReport:
    conormal: float
    graph: float
    residual: float
    scale: float


def bridge_check(K: ConvexBody, tau: Form,
                 spec: Optional[QuadratureSpec] = None) -> BridgeReport:
    """Residual of the pushforward identity between the restricted conormal
    cycle of K and the differential cycle of h_K(., -1)."""
    lhs = conormal_eval(K, tau, spec=spec)
    fK = body_restriction(K)
    rhs = eval_smooth(fK, tau, spec=spec)
    scale = max(1.0, abs(float(lhs.value)), abs(float(rhs.value)))
    return BridgeReport(float(lhs.value), float(rhs.value),
                        abs(float(lhs.value) - float(rhs.value)), scale)


def t_map(tau: Form, K: ConvexBody) -> EvalResult:
    """The valuation transferred to bodies: mu(h_K(., -1))."""
    return evaluate(Valuation(tau), body_restriction(K))
