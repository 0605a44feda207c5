"""Non-timelike barrier curves in the plane y = 1 and their certification.

For a graph x2 = x(t) over x1 = t with slope v, a tangent (1, v) is
non-timelike iff

    Q = A v^2 + 2 B v + Cq >= 0,
    G = t^2 + b^2 x^2 + 1,  A = 8t^2 - (1+t^2) G,
    B = x t (G - 4(b+1)),   Cq = 2(b+1)^2 x^2 - (1+x^2) G.

Barrier slopes exist iff Delta = B^2 - A Cq >= 0, and Delta = -G F where F
is the boundary quartic; so Delta > 0 exactly on C.  The lower branch of
Delta = 0 over t in [1 - sqrt2, sqrt2 - 1] is x_{+-}(t) (upper half of the
oval boundary).

Two constructions of the upper half barrier through p = (1 - sqrt2, 0):

* ``assemble_barrier``: boundary arc up to t = -0.1, then the graph
  x_{+-}(t) + a (t - T)^2, then the hyperbola beta sqrt(1 + a t^2).
  The boundary arc is timelike away from the apices (its slope differs
  from the unique barrier slope -B/A), so this certificate is Falsified.
* ``assemble_drift_barrier``: an integral curve of a fixed fraction of the
  barrier wedge leaving p vertically, shot to hit (0, beta), then the
  hyperbola.  Every tangent lies inside the closed barrier wedge.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .chart import MorseChart
from .errors import (
    DegenerateA,
    EnvelopeViolated,
    FormMismatch,
    GapMismatch,
    OutOfDomain,
    VerticalTangent,
)
from .projection import BarrierSign, barrier_product, plane_residual_parts, require_zeta2
from .regions import SQRT2, beta_roots, boundary_residual, residual_gradient

RESIDUAL_TOL = 1e-12
LIGHT_REL_TOL = 1e-9
XPM_STEP = 1e-6
P_POINT = (1.0 - SQRT2, 0.0)
Q_POINT = (1.0 + SQRT2, 0.0)


# --------------------------------------------------------------------------
# quadratic criterion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadCoeffs:
    A: float
    B: float
    Cq: float
    G: float

    def value(self, v):
        return self.A * v * v + 2.0 * self.B * v + self.Cq


def quad_coeffs(chart: MorseChart, t, x) -> QuadCoeffs:
    require_zeta2(chart)
    b = chart.b
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    G = t * t + b * b * x * x + 1.0
    A = 8.0 * t * t - (1.0 + t * t) * G
    B = x * t * (G - 4.0 * (b + 1.0))
    Cq = 2.0 * (b + 1.0) ** 2 * x * x - (1.0 + x * x) * G
    if A.ndim == 0:
        return QuadCoeffs(float(A), float(B), float(Cq), float(G))
    return QuadCoeffs(A, B, Cq, G)


def _factored_delta(b, t, x, G):
    phi = (b * b - 4.0 * b + 1.0) * (1.0 + t * t) + 8.0 * b
    return -G * (x ** 4 * b * b - x * x * phi + (t ** 4 - 6.0 * t * t + 1.0))


def discriminant(chart: MorseChart, t, x):
    """Delta = B^2 - A Cq, checked against its factored form."""
    q = quad_coeffs(chart, t, x)
    direct = q.B * q.B - q.A * q.Cq
    fact = _factored_delta(chart.b, np.asarray(t, dtype=float), np.asarray(x, dtype=float), q.G)
    # magnitudes before cancellation, so near-roots are compared absolutely
    b = chart.b
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    c_mag = 2.0 * (b + 1.0) ** 2 * x * x + (1.0 + x * x) * q.G
    phi = (b * b + 4.0 * b + 1.0) * (1.0 + t * t) + 8.0 * b
    f_mag = q.G * (x ** 4 * b * b + x * x * phi + t ** 4 + 6.0 * t * t + 1.0)
    scale = q.B * q.B + np.abs(q.A) * c_mag + f_mag
    if np.any(np.abs(direct - fact) > 1e-6 * scale):
        raise FormMismatch("direct and factored discriminants disagree")
    return fact if np.ndim(fact) else float(fact)


def v_range(chart: MorseChart, t: float, x: float):
    """Closed interval of barrier slopes at (t, x), or None if empty."""
    q = quad_coeffs(chart, t, x)
    if abs(q.A) < 1e-12:
        raise DegenerateA(f"|A| = {abs(q.A):.3g} at t={t}, x={x}")
    d = discriminant(chart, t, x)
    scale = abs(q.B * q.B) + abs(q.A * q.Cq)
    if d < -LIGHT_REL_TOL * scale:
        return None
    r = math.sqrt(max(d, 0.0)) / abs(q.A)
    c = -q.B / q.A
    return (c - r, c + r)


# --------------------------------------------------------------------------
# x_{+-}, its box bound, hyperbola coefficients
# --------------------------------------------------------------------------

def _phi_psi(b, t):
    t = np.asarray(t, dtype=float)
    phi = (b * b - 4.0 * b + 1.0) * (1.0 + t * t) + 8.0 * b
    psi = t ** 4 - 6.0 * t * t + 1.0
    return phi, psi


def x_plus_minus(b: float, t):
    """Smaller positive root x of Delta(t, x) = 0 (lower sheet of the
    factored quartic), computed without cancellation."""
    phi, psi = _phi_psi(b, t)
    inner = phi * phi - 4.0 * b * b * psi
    if np.any(psi < 0) or np.any(inner < 0) or np.any(phi <= 0):
        raise OutOfDomain(f"x_+- undefined at b={b}, t={t}")
    X = 2.0 * psi / (phi + np.sqrt(inner))
    out = np.sqrt(X)
    return float(out) if np.ndim(out) == 0 else out


def x_plus_minus_slope(b: float, t, h: float = XPM_STEP):
    t = np.asarray(t, dtype=float)
    out = (np.asarray(x_plus_minus(b, t + h)) - np.asarray(x_plus_minus(b, t - h))) / (2.0 * h)
    return float(out) if np.ndim(out) == 0 else out


def box_lower_bound(b: float, t):
    phi, psi = _phi_psi(b, t)
    if np.any(psi < 0) or np.any(phi <= 0):
        raise OutOfDomain(f"box bound undefined at b={b}, t={t}")
    out = np.sqrt(psi / phi)
    return float(out) if np.ndim(out) == 0 else out


def hyperbola_coeffs(b: float, beta: float, a: float) -> tuple[float, float, float]:
    """Coefficients of (1 + a t^2) Q along gamma(t) = beta sqrt(1 + a t^2)."""
    b2, be2 = b * b, beta * beta
    c4 = a * a * be2 * (b2 - 4 * b + 1) - a ** 3 * b2 * be2 * be2 - a
    c2 = -(a * a + a) * b2 * be2 * be2 + (2 * a * b2 - a * a - 4 * a - 1) * be2 - (1 + a)
    c0 = -b2 * be2 * be2 + (b2 + 4 * b + 1) * be2 - 1
    return c4, c2, c0


# --------------------------------------------------------------------------
# curves and certificates
# --------------------------------------------------------------------------

@dataclass
class PlaneCurve:
    """Samples of a plane curve: parameter t, points (n, 2), tangents (n, 2)."""

    t: np.ndarray
    points: np.ndarray
    tangents: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.tangents = np.asarray(self.tangents, dtype=float)

    def __len__(self):
        return len(self.t)

    @classmethod
    def graph(cls, t, x, slope):
        t = np.asarray(t, dtype=float)
        return cls(t, np.stack([t, x], axis=-1), np.stack([np.ones_like(t), slope], axis=-1))

    def mirrored(self) -> "PlaneCurve":
        s = np.array([1.0, -1.0])
        return PlaneCurve(self.t.copy(), self.points * s, self.tangents * s)

    def reversed(self) -> "PlaneCurve":
        return PlaneCurve(-self.t[::-1], self.points[::-1].copy(), -self.tangents[::-1])


def curve_residuals(chart: MorseChart, curve: PlaneCurve):
    """Non-timelike residual lhs - rhs per sample and its tolerance."""
    if not np.all(np.isfinite(curve.tangents)):
        raise VerticalTangent("non-finite tangent: reparametrize the curve")
    lhs, rhs = plane_residual_parts(chart, curve.points, curve.tangents)
    return lhs - rhs, np.maximum(RESIDUAL_TOL, LIGHT_REL_TOL * rhs)


@dataclass
class CertifiedPiece:
    name: str
    curve: PlaneCurve
    residuals: np.ndarray
    tolerance: np.ndarray

    @property
    def verified(self) -> bool:
        return bool(np.all(self.residuals >= -self.tolerance))

    @property
    def min_margin(self) -> float:
        return float(np.min(self.residuals))

    @property
    def argmin_t(self) -> float:
        return float(self.curve.t[int(np.argmin(self.residuals))])


@dataclass
class BarrierCertificate:
    pieces: list
    params: dict = field(default_factory=dict)
    extra_checks: dict = field(default_factory=dict)

    @property
    def curve(self) -> PlaneCurve:
        return self.pieces[0].curve if len(self.pieces) == 1 else self.polyline()[0]

    @property
    def residuals(self) -> np.ndarray:
        return np.concatenate([p.residuals for p in self.pieces])

    @property
    def min_margin(self) -> float:
        return min(p.min_margin for p in self.pieces)

    @property
    def min_location(self) -> tuple[str, float]:
        worst = min(self.pieces, key=lambda p: p.min_margin)
        return worst.name, worst.argmin_t

    @property
    def verified(self) -> bool:
        return all(p.verified for p in self.pieces) and all(self.extra_checks.values())

    @property
    def verdict(self) -> str:
        return "Verified" if self.verified else "Falsified"

    def polyline(self):
        """Concatenated points, tangents and parameter of all pieces, with
        duplicated junction points removed."""
        pts, tans = [], []
        for k, p in enumerate(self.pieces):
            P, T = p.curve.points, p.curve.tangents
            if k and np.allclose(P[0], pts[-1][-1], atol=1e-9, rtol=0):
                P, T = P[1:], T[1:]
            pts.append(P)
            tans.append(T)
        P = np.vstack(pts)
        T = np.vstack(tans)
        return PlaneCurve(np.arange(len(P), dtype=float), P, T), None

    def to_dict(self) -> dict:
        pieces = []
        for p in self.pieces:
            c = p.curve
            samples = [
                {"t": float(t), "x1": float(x[0]), "x2": float(x[1]),
                 "v": [float(v[0]), float(v[1])], "residual": float(r)}
                for t, x, v, r in zip(c.t, c.points, c.tangents, p.residuals)
            ]
            pieces.append({"name": p.name, "verdict": "Verified" if p.verified else "Falsified",
                           "min_margin": p.min_margin, "samples": samples})
        return {
            "params": {k: self.params[k] for k in sorted(self.params)},
            "checks": {k: bool(v) for k, v in sorted(self.extra_checks.items())},
            "pieces": pieces,
            "min_margin": self.min_margin,
            "verdict": self.verdict,
        }

    def to_json(self, fh=None, **kw) -> str:
        s = json.dumps(self.to_dict(), sort_keys=True, **kw)
        if fh is not None:
            fh.write(s)
        return s


def certify_piece(chart: MorseChart, curve: PlaneCurve, name: str) -> CertifiedPiece:
    res, tol = curve_residuals(chart, curve)
    return CertifiedPiece(name, curve, res, tol)


def verify_curve(chart: MorseChart, curve: PlaneCurve, name: str = "curve") -> BarrierCertificate:
    piece = certify_piece(chart, curve, name)
    return BarrierCertificate([piece], {"b": chart.b, "n": len(curve)})


def _refined_min(fun, t, r, factor=3):
    """Relocate a negative sampled minimum on a 3x denser local grid."""
    k = int(np.argmin(r))
    if r[k] >= 0 or len(t) < 3:
        return float(t[k]), float(r[k])
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, len(t) - 1)]
    tt = np.linspace(lo, hi, 2 * factor + 1)
    rr = fun(tt)
    j = int(np.argmin(rr))
    return float(tt[j]), float(rr[j])


def hyperbola_curve(b: float, beta: float, a: float, t_max: float = 50.0, n: int = 10_000) -> PlaneCurve:
    t = np.linspace(0.0, t_max, n)
    root = np.sqrt(1.0 + a * t * t)
    return PlaneCurve.graph(t, beta * root, a * beta * t / root)


def verify_hyperbola(b: float, beta: float, a: float, t_max: float = 50.0, n: int = 10_000) -> BarrierCertificate:
    chart = MorseChart(b, 2.0)
    curve = hyperbola_curve(b, beta, a, t_max, n)
    piece = certify_piece(chart, curve, "hyperbola")
    c4, c2, c0 = hyperbola_coeffs(b, beta, a)
    s0 = t_max * t_max
    tail = c4 > 0 and (c4 * s0 * s0 + c2 * s0 + c0) >= 0 and (-c2 / (2 * c4)) <= s0

    def fun(tt):
        root = np.sqrt(1.0 + a * tt * tt)
        c = PlaneCurve.graph(tt, beta * root, a * beta * tt / root)
        return curve_residuals(chart, c)[0]

    t_min, r_min = _refined_min(fun, curve.t, piece.residuals)
    params = {"b": b, "beta": beta, "a": a, "t_max": t_max, "n": n,
              "c4": c4, "c2": c2, "c0": c0, "coeffs_nonnegative": bool(min(c4, c2, c0) >= 0),
              "t_at_min": t_min, "refined_min": r_min}
    return BarrierCertificate([piece], params, {"tail_beyond_t_max": tail})


def interpolation_curve(b: float, a: float, t0: float = -0.1, t1: float = 0.0, n: int = 10_000) -> PlaneCurve:
    if a < 0:
        raise ValueError("a must be nonnegative")
    t = np.linspace(t0, t1, n)
    x = x_plus_minus(b, t) + a * (t - t0) ** 2
    slope = x_plus_minus_slope(b, t) + 2.0 * a * (t - t0)
    return PlaneCurve.graph(t, x, slope)


def interpolation_endpoint_residual(b: float, a: float, t0: float = -0.1) -> float:
    """Criterion value Q at the t = 0 end of the interpolation graph."""
    chart = MorseChart(b, 2.0)
    c = interpolation_curve(b, a, t0, 0.0, 3)
    return float(curve_residuals(chart, PlaneCurve(c.t[-1:], c.points[-1:], c.tangents[-1:]))[0][0])


# --------------------------------------------------------------------------
# drift ODE
# --------------------------------------------------------------------------

@dataclass
class DriftSolution:
    t: np.ndarray
    X: np.ndarray
    T: float
    c_lo: float

    def lower_envelope(self):
        return 0.25 * self.c_lo ** 2 * np.clip(self.t - self.T, 0.0, None) ** 2


def drift_solution(V, c_lo: float, c_hi: float, T: float, t_end: float, n: int = 2001,
                   t_start: float | None = None, check_x_max: float = 1.0) -> DriftSolution:
    """Solution of X' = V(X, t) that stays at 0 up to T and leaves it at T.

    The exit from 0 is not unique; the realized branch is the one that
    leaves along the extremal lower solution.  ``c_hi`` may be ``inf`` to
    check only the lower envelope.
    """
    if not (0 < c_lo <= c_hi):
        raise ValueError("need 0 < c_lo <= c_hi")
    if not t_end > T:
        raise ValueError("need t_end > T")
    t_start = T if t_start is None else min(t_start, T)
    # envelope check on a probe grid in (0, check_x_max] x [T, t_end]
    xs = np.geomspace(1e-12, check_x_max, 60)
    ts = np.linspace(T, t_end, 41)
    XX, TT = np.meshgrid(xs, ts)
    VV = np.vectorize(V)(XX, TT)
    sq = np.sqrt(XX)
    tol = 1e-9 * np.maximum(1.0, np.abs(VV))
    if np.any(VV < c_lo * sq - tol) or np.any(VV > c_hi * sq + tol):
        raise EnvelopeViolated("V leaves c_lo sqrt(x) <= V <= c_hi sqrt(x) on the probe grid")
    # Leave 0 along the extremal lower solution c_lo^2 (t - T)^2 / 4: start on
    # it at T + tau; by comparison the solution stays above it afterwards.
    tau = 1e-8 * (t_end - T)
    X0 = 0.25 * c_lo * c_lo * tau * tau

    def rhs(t, x):
        return [V(max(x[0], 0.0), t)]

    sol = solve_ivp(rhs, (T + tau, t_end), [X0], method="LSODA", rtol=1e-11, atol=1e-14,
                    dense_output=True)
    if sol.status != 0:
        raise EnvelopeViolated(f"drift integration failed: {sol.message}")
    t = np.linspace(t_start, t_end, n)
    X = np.zeros_like(t)
    m = t > T
    late = t >= T + tau
    X[late] = sol.sol(t[late])[0]
    early = m & ~late
    X[early] = 0.25 * c_lo * c_lo * (t[early] - T) ** 2
    Xs = np.clip(X, 0.0, None)
    tt = t[m]
    VV = np.array([V(x, s) for x, s in zip(Xs[m], tt)])
    if np.any(VV < c_lo * np.sqrt(Xs[m]) - 1e-9) or np.any(VV > c_hi * np.sqrt(Xs[m]) + 1e-9):
        raise EnvelopeViolated("V leaves the envelope along the solution")
    return DriftSolution(t, X, T, c_lo)


def holder_drift_field(b: float):
    """V(xi, t) = upper barrier slope at x_{+-}(t) + xi minus the slope of
    x_{+-}: the drift of the upper lightlike direction relative to the
    Delta = 0 locus, written in the offset xi >= 0."""
    chart = MorseChart(b, 2.0)

    def V(xi, t):
        x0 = x_plus_minus(b, t)
        q = quad_coeffs(chart, t, x0 + xi)
        d = max(float(_factored_delta(b, t, x0 + xi, q.G)), 0.0)
        v_up = (-q.B - math.sqrt(d)) / q.A
        return v_up - x_plus_minus_slope(b, t)

    return V


def delta_a2_slope(b: float, t, x, h: float | None = None):
    """Central difference of Delta / A^2 in x (vectorized)."""
    chart = MorseChart(b, 2.0)
    h = 1e-6 / b if h is None else h
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))

    def r(xx):
        return discriminant(chart, t, xx) / quad_coeffs(chart, t, xx).A ** 2

    return (r(x + h) - r(x - h)) / (2.0 * h)


def delta_a2_slope_min(b: float, n_t: int = 41, n_x: int = 200) -> float:
    """Minimum of d/dx (Delta / A^2) over t in [-0.1, 0], x in (0.75/b, 1.5/b)."""
    t = np.linspace(-0.1, 0.0, n_t)[:, None]
    x = np.linspace(0.75 / b, 1.5 / b, n_x + 2)[None, 1:-1]
    return float(np.min(delta_a2_slope(b, t, x)))


# --------------------------------------------------------------------------
# barrier wedge and the drift construction
# --------------------------------------------------------------------------

def barrier_wedge(b: float, x1: float, x2: float):
    """Non-timelike directions at (x1, x2) as an angle interval.

    With Q(cos a, sin a) = alpha + R cos(2a - psi) the closed barrier wedge
    is |2a - psi| <= delta, delta = arccos(-alpha/R).  Returns
    (centre, delta, -alpha/R); -alpha/R > 1 means no barrier directions.
    """
    G = x1 * x1 + b * b * x2 * x2 + 1.0
    l1, l2 = (b + 1.0) * x2, -2.0 * x1
    k1, k2 = x2, -x1
    m11 = 2 * l1 * l1 - G * (1 + k1 * k1)
    m22 = 2 * l2 * l2 - G * (1 + k2 * k2)
    m12 = 2 * l1 * l2 - G * k1 * k2
    alpha = 0.5 * (m11 + m22)
    beta = 0.5 * (m11 - m22)
    R = math.hypot(beta, m12)
    psi = math.atan2(m12, beta)
    c = -alpha / R if R > 0 else math.inf
    return 0.5 * psi, math.acos(max(-1.0, min(1.0, c))), c


def _direction(b, P, s, heading):
    cen, delta, c = barrier_wedge(b, P[0], P[1])
    k = round((heading - cen) / math.pi)
    cen += k * math.pi
    return cen - 0.5 * delta + s * delta, c


def _shoot(b, s, ds, x_stop=0.0, max_len=5.0):
    """RK4 in arclength along the wedge-fraction field from p, heading up."""
    P = np.array(P_POINT)
    h = 0.5 * math.pi
    pts, angs = [P.copy()], [h]
    worst = -math.inf
    length = 0.0
    while P[0] < x_stop:
        a1, c1 = _direction(b, P, s, h)
        k1 = np.array([math.cos(a1), math.sin(a1)])
        a2, c2 = _direction(b, P + 0.5 * ds * k1, s, a1)
        k2 = np.array([math.cos(a2), math.sin(a2)])
        a3, c3 = _direction(b, P + 0.5 * ds * k2, s, a1)
        k3 = np.array([math.cos(a3), math.sin(a3)])
        a4, c4 = _direction(b, P + ds * k3, s, a1)
        k4 = np.array([math.cos(a4), math.sin(a4)])
        worst = max(worst, c2, c3, c4)
        Pn = P + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if Pn[0] >= x_stop:
            Pn = P + (x_stop - P[0]) / (Pn[0] - P[0]) * (Pn - P)
            Pn[0] = x_stop
        P = Pn
        h = a1
        length += ds
        an, cn = _direction(b, P, s, h)
        worst = max(worst, cn)
        pts.append(P.copy())
        angs.append(an)
        if length > max_len or P[1] <= 0:
            return None
    return np.array(pts), np.array(angs), worst


def drift_barrier(b: float, beta_target: float, ds: float = 5e-4,
                  s_grid=(0.02, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.75, 0.9)) -> tuple[PlaneCurve, float]:
    """Upper barrier from p to (0, beta_target) following the direction at
    fraction s of the barrier wedge (s = 0: lower lightlike edge); s is
    found by shooting.  Shots that leave C are invalid.  Returns the curve
    and s."""
    MorseChart(b, 2.0)  # validates b

    def end_height(s):
        r = _shoot(b, s, ds)
        if r is None or r[2] > 1.0 + 1e-9:
            return math.nan
        return r[0][-1, 1] - beta_target

    lo = hi = None
    prev = None
    for s in s_grid:
        f = end_height(s)
        if math.isnan(f):
            prev = None
            continue
        if f == 0:
            lo = hi = s
            break
        if prev is not None and prev[1] < 0 < f:
            lo, hi = prev[0], s
            break
        prev = (s, f)
        if f > 0:
            break
    if lo is None:
        raise GapMismatch(f"no wedge fraction reaches (0, {beta_target}) inside C at b={b}")
    if lo == hi:
        s_star = lo
        pts, angs, _ = _shoot(b, s_star, ds)
        tang = np.stack([np.cos(angs), np.sin(angs)], axis=-1)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
        return PlaneCurve(np.concatenate([[0.0], np.cumsum(seg)]), pts, tang), s_star
    s_star = brentq(end_height, lo, hi, xtol=1e-12, rtol=1e-12)
    pts, angs, _ = _shoot(b, s_star, ds)
    pts[-1, 1] = beta_target  # remove the shooting residual (< xtol-scale)
    tang = np.stack([np.cos(angs), np.sin(angs)], axis=-1)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    return PlaneCurve(arc, pts, tang), s_star


def chord_min_rel_residual(chart: MorseChart, curve: PlaneCurve) -> float:
    """Smallest relative residual of the polyline chords at their midpoints;
    a check on the sampled geometry independent of the stored tangents."""
    P = curve.points
    d = np.diff(P, axis=0)
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    lhs, rhs = plane_residual_parts(chart, 0.5 * (P[1:] + P[:-1]), d)
    return float(np.min((lhs - rhs) / rhs))


def junction_ok(b: float, P, t_in, t_out, n: int = 64) -> bool:
    """All directions between incoming and outgoing tangents (the turn
    taken at a corner) must be non-timelike."""
    chart = MorseChart(b, 2.0)
    a0 = math.atan2(t_in[1], t_in[0])
    a1 = math.atan2(t_out[1], t_out[0])
    d = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    ang = a0 + np.linspace(0.0, 1.0, n) * d
    v = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    lhs, rhs = plane_residual_parts(chart, np.broadcast_to(np.asarray(P, float), v.shape), v)
    return bool(np.all(lhs - rhs >= -np.maximum(RESIDUAL_TOL, LIGHT_REL_TOL * rhs)))


def _full_barrier(chart, upper_pieces, params, extra):
    """Mirror the upper pieces and order everything bottom -> p -> top."""
    lower = [(name + "_mirror", c.mirrored().reversed()) for name, c in reversed(upper_pieces)]
    pieces = [certify_piece(chart, c, name) for name, c in lower + list(upper_pieces)]
    cert = BarrierCertificate(pieces, params, extra)
    cert.extra_checks.setdefault("continuity", _continuity(pieces))
    return cert


def _continuity(pieces, tol=1e-6) -> bool:
    for a, c in zip(pieces, pieces[1:]):
        if np.linalg.norm(a.curve.points[-1] - c.curve.points[0]) > tol:
            return False
    return True


def _oval_points(chart, phis):
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    u = np.stack([np.cos(phis), np.sin(phis)], axis=-1)
    lo = np.zeros(len(phis))
    hi = np.full(len(phis), 0.5)  # the oval lies inside |p| < sqrt2 - 1
    for _ in range(80):
        m = 0.5 * (lo + hi)
        pos = boundary_residual(chart, m[:, None] * u) > 0
        lo = np.where(pos, m, lo)
        hi = np.where(pos, hi, m)
    return 0.5 * (lo + hi)[:, None] * u


def oval_arc(b: float, x1_end: float, n: int = 2000) -> PlaneCurve:
    """Upper half of the oval boundary from p to the point with x1 = x1_end,
    sampled by polar angle; tangents from the implicit gradient."""
    chart = MorseChart(b, 2.0)
    phi_end = brentq(lambda ph: _oval_points(chart, ph)[0, 0] - x1_end, 0.5 * math.pi, math.pi, xtol=1e-14)
    pts = _oval_points(chart, np.linspace(math.pi, phi_end, n))
    pts[0] = P_POINT
    g = residual_gradient(chart, pts)
    tang = np.stack([-g[:, 1], g[:, 0]], axis=-1)
    tang /= np.linalg.norm(tang, axis=-1, keepdims=True)
    tang[tang[:, 1] < 0] *= -1  # heading up from p
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    return PlaneCurve(np.concatenate([[0.0], np.cumsum(seg)]), pts, tang)


def assemble_barrier(b: float = 8.0, a_interp: float = 2.0, a_hyp: float = 6.0,
                     beta_target: float = 0.102, t_max: float = 50.0, n: int = 10_000,
                     t_depart: float = -0.1) -> BarrierCertificate:
    """Boundary arc + interpolation graph + hyperbola, mirrored."""
    chart = MorseChart(b, 2.0)
    try:
        lo, _ = beta_roots(b)
        x0_end = x_plus_minus(b, 0.0)
    except Exception as exc:  # regime without the construction
        raise GapMismatch(str(exc)) from exc
    if beta_target < lo:
        raise GapMismatch(f"beta_target {beta_target} below the oval height {lo}")
    T = t_depart
    end = x0_end + a_interp * T * T
    if end < beta_target - 1e-6:
        raise GapMismatch(f"interpolation ends at {end:.6g} < beta_target {beta_target}")
    if end > beta_target + 1e-6:
        if a_interp == 0:
            raise GapMismatch("a_interp = 0 cannot reach beta_target")
        T = -math.sqrt((beta_target - x0_end) / a_interp)  # delayed departure
    try:
        arc = oval_arc(b, T, n)
        interp = interpolation_curve(b, a_interp, T, 0.0, n)
    except OutOfDomain as exc:
        raise GapMismatch(str(exc)) from exc
    interp.points[-1, 1] = beta_target if abs(interp.points[-1, 1] - beta_target) <= 1e-6 else interp.points[-1, 1]
    hyp = hyperbola_curve(b, beta_target, a_hyp, t_max, n)
    hcert = verify_hyperbola(b, beta_target, a_hyp, t_max, n)
    extra = {
        "tail_beyond_t_max": hcert.extra_checks["tail_beyond_t_max"],
        "junction_arc_interp": junction_ok(b, interp.points[0], arc.tangents[-1], interp.tangents[0]),
        "junction_interp_hyp": junction_ok(b, hyp.points[0], interp.tangents[-1], hyp.tangents[0]),
    }
    params = {"b": b, "construction": "interp", "a_interp": a_interp, "a_hyp": a_hyp,
              "beta_target": beta_target, "t_max": t_max, "n": n, "t_depart": T,
              "interp_end_height": float(interp.points[-1, 1])}
    return _full_barrier(chart, [("boundary_arc", arc), ("interpolation", interp), ("hyperbola", hyp)],
                         params, extra)


def assemble_drift_barrier(b: float = 8.0, a_hyp: float = 6.0, beta_target: float = 0.102,
                           t_max: float = 50.0, n: int = 10_000, ds: float = 5e-4) -> BarrierCertificate:
    """Wedge-fraction curve from p to (0, beta_target) + hyperbola, mirrored."""
    chart = MorseChart(b, 2.0)
    drift, s_star = drift_barrier(b, beta_target, ds)
    hyp = hyperbola_curve(b, beta_target, a_hyp, t_max, n)
    hcert = verify_hyperbola(b, beta_target, a_hyp, t_max, n)
    extra = {
        "tail_beyond_t_max": hcert.extra_checks["tail_beyond_t_max"],
        "junction_drift_hyp": junction_ok(b, hyp.points[0], drift.tangents[-1], hyp.tangents[0]),
        "junction_at_p": junction_ok(b, drift.points[0], -drift.tangents[0] * np.array([1, -1]),
                                     drift.tangents[0]),
    }
    params = {"b": b, "construction": "drift", "a_hyp": a_hyp, "beta_target": beta_target,
              "t_max": t_max, "n": n, "wedge_fraction": s_star, "ds": ds,
              "drift_max_height": float(drift.points[:, 1].max()),
              "chord_min_rel_residual": chord_min_rel_residual(chart, drift)}
    return _full_barrier(chart, [("drift", drift), ("hyperbola", hyp)], params, extra)


def segment_signs(chart: MorseChart, curve: PlaneCurve) -> np.ndarray:
    """+1 positive barrier, -1 negative, per sample (sign of -<v x rho, grad f>)."""
    s = barrier_product(chart, curve.points, curve.tangents)
    return np.where(s < 0, 1, np.where(s > 0, -1, 0))


def sign_label(sign: int) -> BarrierSign:
    return {1: BarrierSign.PositiveBarrier, -1: BarrierSign.NegativeBarrier}.get(int(sign), BarrierSign.NotBarrier)
