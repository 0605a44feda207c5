"""Projection of the cone field to the affine plane y = 1.

A point z = (x, y) with y != 0 is first sent radially to (x, |y|) in
R^2 x R_+ and then to the plane point x/|y|.  At a plane point p the lifted
3-D position is rho = (p1, p2, 1) and the reduced gradient is
(-p1, -b p2, 1).  A plane vector v is timelike for the projected cone field
iff some lift v + lam*rho is timelike in 3-D.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .chart import (
    LIGHTLIKE_TOL,
    CausalClass,
    Classification,
    MorseChart,
)
from .errors import NonpositiveY, OnStableManifold, UnsupportedZeta, ZeroVector


class BarrierSign(enum.Enum):
    PositiveBarrier = "PositiveBarrier"
    NegativeBarrier = "NegativeBarrier"
    NotBarrier = "NotBarrier"


def require_zeta2(chart: MorseChart) -> None:
    if chart.zeta != 2.0:
        raise UnsupportedZeta(f"only zeta = 2 is supported here, got {chart.zeta}")


def project_rho(z):
    """(x1, x2, y1, y2) -> ((x1, x2), |y|)."""
    z = np.asarray(z, dtype=float)
    r = math.hypot(z[2], z[3])
    if r == 0:
        raise OnStableManifold("y = 0: point lies on the stable plane")
    return z[:2].copy(), r


def project_pi(x, y: float) -> np.ndarray:
    if not y > 0:
        raise NonpositiveY(f"y must be positive, got {y}")
    return np.asarray(x, dtype=float) / y


def plane_point(z) -> np.ndarray:
    x, r = project_rho(z)
    return project_pi(x, r)


def push_forward(z, w) -> np.ndarray:
    """Differential of pi o rho applied to the 4-vector ``w`` at ``z``."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    x, r = project_rho(z)
    rdot = (z[2] * w[2] + z[3] * w[3]) / r
    return w[:2] / r - x * rdot / r ** 2


def lift_vector(p, v, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Lift point (p, 1, 0) and the 4-vector v + lam*rho over it."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    z = np.array([p[0], p[1], 1.0, 0.0])
    w = np.array([v[0] + lam * p[0], v[1] + lam * p[1], lam, 0.0])
    return z, w


def projected_gradient(chart: MorseChart, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.stack([-2.0 * p[..., 0], -(chart.b + 1.0) * p[..., 1]], axis=-1)


def barrier_product(chart: MorseChart, p, v):
    """<v x rho, grad f> = -2 v2 x1 + (b+1) v1 x2 (vectorized)."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    return -2.0 * v[..., 1] * p[..., 0] + (chart.b + 1.0) * v[..., 0] * p[..., 1]


def plane_residual_parts(chart: MorseChart, p, v):
    """Left and right sides of the zeta = 2 spacelike inequality lhs > rhs."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    x1, x2 = p[..., 0], p[..., 1]
    v1, v2 = v[..., 0], v[..., 1]
    b = chart.b
    lhs = 2.0 * barrier_product(chart, p, v) ** 2
    rhs = (v1 * v1 + v2 * v2 + (v1 * x2 - v2 * x1) ** 2) * (x1 * x1 + b * b * x2 * x2 + 1.0)
    return lhs, rhs


def plane_residual(chart: MorseChart, p, v):
    """lhs - rhs: positive spacelike, zero lightlike, negative timelike."""
    lhs, rhs = plane_residual_parts(chart, p, v)
    return lhs - rhs


def closed_form_spacelike(chart: MorseChart, p, v) -> bool:
    """Generic-angle form: v is spacelike iff the angle between v x rho and
    grad f lies in [0, pi/2 - theta) or (pi/2 + theta, pi]."""
    p = np.asarray(p, dtype=float)
    v3 = np.array([v[0], v[1], 0.0])
    rho = np.array([p[0], p[1], 1.0])
    n = np.array([-p[0], -chart.b * p[1], 1.0])
    c = np.cross(v3, rho)
    cosang = float(np.dot(c, n) / (np.linalg.norm(c) * np.linalg.norm(n)))
    ang = math.acos(max(-1.0, min(1.0, cosang)))
    return ang < math.pi / 2 - chart.theta or ang > math.pi / 2 + chart.theta


def cone_cos(chart: MorseChart, shrink: float = 0.0) -> float:
    """cos of the cone half-angle after shrinking it by ``shrink`` radians
    (negative values grow the cone)."""
    ang = min(max(chart.theta - shrink, 0.0), math.pi / 2)
    return math.cos(ang)


def oriented_timelike(chart: MorseChart, p, d, sigma: int = 1, shrink: float = 0.0):
    """Exact test whether plane direction ``d`` at ``p`` lies in the open
    projected cone of orientation ``sigma`` (+1 future, -1 past).

    The lifts of d form the open half-plane {d + lam*rho, any lam} on the
    d side of span(rho).  Writing it in an orthonormal basis (e1 = rho_hat,
    e2 = part of d orthogonal to rho) the best achievable cosine with
    sigma*n_hat is R = |proj n_hat| if the optimum angle falls in (0, pi),
    otherwise the endpoint value |<e1, n_hat>| (not attained, strict test).
    Vectorized over leading axes of ``p`` and ``d``.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    p, d = np.broadcast_arrays(p, d)
    x1, x2 = p[..., 0], p[..., 1]
    n = np.stack([-x1, -chart.b * x2, np.ones_like(x1)], axis=-1)
    n = sigma * n / np.linalg.norm(n, axis=-1, keepdims=True)
    rho = np.stack([x1, x2, np.ones_like(x1)], axis=-1)
    e1 = rho / np.linalg.norm(rho, axis=-1, keepdims=True)
    d3 = np.stack([d[..., 0], d[..., 1], np.zeros_like(x1)], axis=-1)
    e2 = d3 - np.sum(d3 * e1, axis=-1, keepdims=True) * e1
    e2 = e2 / np.linalg.norm(e2, axis=-1, keepdims=True)
    a1 = np.sum(e1 * n, axis=-1)
    a2 = np.sum(e2 * n, axis=-1)
    c = cone_cos(chart, shrink)
    return np.where(a2 > 0, np.hypot(a1, a2) > c, np.abs(a1) > c)


def classify_plane(chart: MorseChart, p, v) -> Classification:
    require_zeta2(chart)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ZeroVector("classify_plane needs a nonzero vector")
    lhs, rhs = plane_residual_parts(chart, p, v)
    margin = float((rhs - lhs) / rhs)
    if abs(margin) <= LIGHTLIKE_TOL:
        return Classification(CausalClass.Lightlike, 0.0)
    if margin < 0:
        return Classification(CausalClass.Spacelike, margin)
    if bool(oriented_timelike(chart, p, v, 1)):
        return Classification(CausalClass.TimelikePos, margin)
    if bool(oriented_timelike(chart, p, v, -1)):
        return Classification(CausalClass.TimelikeNeg, margin)
    # within roundoff of the cone edge: fall back on the projected gradient
    s = float(np.dot(projected_gradient(chart, p), v))
    label = CausalClass.TimelikeNeg if s < 0 else CausalClass.TimelikePos
    return Classification(label, margin)


def barrier_sign(chart: MorseChart, p, v) -> BarrierSign:
    cls = classify_plane(chart, p, v)
    if cls.is_timelike:
        return BarrierSign.NotBarrier
    s = float(barrier_product(chart, p, v))
    if s < 0:
        return BarrierSign.PositiveBarrier
    if s > 0:
        return BarrierSign.NegativeBarrier
    return BarrierSign.NotBarrier
