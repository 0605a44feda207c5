"""Gradient lines as g-length maximizers between level sets.

For future timelike v at z,  -g(v, v) = zeta <n, v>^2 - |n|^2 |v|^2
<= (zeta - 1) <n, v>^2  with n = grad f, so every future timelike curve from
{f = f0} to {f = f1} has g-length at most sqrt(zeta - 1) (f1 - f0), with
equality exactly along gradient lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .chart import CausalClass, MorseChart, classify4, gradient4, metric_g, morse_f
from .errors import CriticalPoint, NotTimelike
from .reach import Curve4


@dataclass(frozen=True)
class FlowParams:
    chart: MorseChart
    z0: tuple
    t: float


def gradient_flow(params: FlowParams) -> np.ndarray:
    """Time-t map of z' = grad f: componentwise exp(a_i t) z_i."""
    z0 = np.asarray(params.z0, dtype=float)
    return np.exp(params.chart.A * params.t) * z0


def xf_field(chart: MorseChart, z) -> np.ndarray:
    """X_f = grad f / |grad f|^2; g(X_f, X_f) = 1 - zeta."""
    n = gradient4(chart, z)
    nn = float(n @ n)
    if nn == 0.0:
        raise CriticalPoint("X_f is undefined at the critical point")
    return n / nn


def flow_invariant(z) -> float:
    """x1 * y1: conserved by the flow since a = -1 and +1 on those axes."""
    z = np.asarray(z, dtype=float)
    return float(z[..., 0] * z[..., 2])


def _segment_integrand(chart, Z, V):
    g = metric_g(chart, Z, V, V)
    return np.sqrt(np.clip(-g, 0.0, None)), g


def g_length(chart: MorseChart, curve: Curve4, rel_tol: float = 1e-9) -> float:
    """Sum over segments of the trapezoid rule for sqrt(-g(v, v)), with v the
    constant chord velocity of the segment.

    Constant segments contribute zero.  Raises NotTimelike if a chord is
    spacelike at either end of its segment.
    """
    Z = np.asarray(curve.points, dtype=float)
    t = np.asarray(curve.t, dtype=float)
    if len(Z) < 2:
        return 0.0
    dt = np.diff(t)
    V = np.diff(Z, axis=0) / dt[:, None]
    moving = np.any(V != 0.0, axis=1)
    total = 0.0
    for end in (Z[:-1], Z[1:]):
        s, g = _segment_integrand(chart, end, V)
        scale = np.sum(gradient4(chart, end) ** 2, axis=1) * np.sum(V * V, axis=1)
        bad = moving & (g > rel_tol * scale)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise NotTimelike(f"segment {k} is spacelike (g = {g[k]:.3g})")
        total += 0.5 * float(np.sum(s * dt))
    return total


def level_time(chart: MorseChart, z0, level: float) -> float:
    """Flow time at which the gradient line through z0 reaches f = level."""
    z0 = np.asarray(z0, dtype=float)

    def h(t):
        return morse_f(chart, gradient_flow(FlowParams(chart, tuple(z0), t))) - level

    sgn = 1.0 if h(0.0) < 0 else -1.0
    T = 0.125
    while sgn * h(sgn * T) < 0:
        T *= 2.0
        if T > 1e3:
            raise CriticalPoint("gradient line does not reach the level")
    lo, hi = sorted((0.0, sgn * T))
    return brentq(h, lo, hi, xtol=1e-15, rtol=1e-15)


def gradient_line(chart: MorseChart, z0, f0: float = -1.0, f1: float = 1.0, n: int = 4001) -> Curve4:
    """Gradient line through z0, cut between the levels f0 and f1."""
    t0 = level_time(chart, z0, f0)
    t1 = level_time(chart, z0, f1)
    z0 = np.asarray(z0, dtype=float)
    A = chart.A
    t = np.linspace(t0, t1, n)
    tm = 0.5 * (t[1:] + t[:-1])
    Z = np.exp(np.outer(t, A)) * z0
    Zm = np.exp(np.outer(tm, A)) * z0
    return Curve4(t, Z, Zm, Zm * A, {"t0": t0, "t1": t1})


def level_point(chart: MorseChart, rng, level: float = -1.0) -> np.ndarray:
    """Random point with f = level < 0: y in the unit disc, x scaled onto
    the level set."""
    y = rng.uniform(-1.0, 1.0, 2)
    x = rng.normal(size=2)
    need = 2.0 * (-level) + y @ y  # x1^2 + b x2^2
    x *= math.sqrt(need / (x[0] ** 2 + chart.b * x[1] ** 2))
    return np.array([x[0], x[1], y[0], y[1]])


def random_timelike_curves(chart: MorseChart, n_curves: int = 1000, seed: int = 0,
                           f0: float = -1.0, f1: float = 1.0, step: float = 0.02,
                           spread: float = 0.9, max_steps: int = 20000) -> list:
    """Piecewise-linear future timelike curves from {f = f0} to {f = f1}.

    Each chord makes a random angle below ``spread * theta`` with grad f at
    its start and is redrawn, with a narrower angle and half the length, if it
    is not future timelike at its end.  The last chord is cut where f reaches f1.
    """
    rng = np.random.default_rng(seed)
    theta = chart.theta
    out = []
    for _ in range(n_curves):
        z = level_point(chart, rng, f0)
        pts = [z]
        for _k in range(max_steps):
            n = gradient4(chart, z)
            nh = n / np.linalg.norm(n)
            w = rng.normal(size=4)
            w -= (w @ nh) * nh
            w /= np.linalg.norm(w)
            lim, h = spread * theta, step
            while True:
                a = rng.uniform(0.0, lim)
                v = math.cos(a) * nh + math.sin(a) * w
                if morse_f(chart, z + h * v) >= f1:
                    # f along the chord is quadratic in s; cut at f = f1
                    Av = chart.A * v
                    qa = 0.5 * float(v @ Av)
                    qb = float(z @ Av)
                    qc = float(morse_f(chart, z)) - f1
                    h = brentq(lambda s: qa * s * s + qb * s + qc, 0.0, h, xtol=1e-15)
                    done = True
                else:
                    done = False
                if classify4(chart, z + h * v, v).label is CausalClass.TimelikePos:
                    break
                lim *= 0.5
                h *= 0.5
            z = z + h * v
            pts.append(z)
            if done:
                break
        else:
            raise RuntimeError("random curve did not reach the upper level")
        P = np.array(pts)
        L = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
        Pm = 0.5 * (P[1:] + P[:-1])
        Vm = np.diff(P, axis=0) / np.diff(L)[:, None]
        out.append(Curve4(L, P, Pm, Vm))
    return out


def appendix_checks(chart: MorseChart, n_points: int = 1000, n_curves: int = 1000, seed: int = 0) -> dict:
    """Numerical checks of the maximizer statement; each entry is
    (passed, value)."""
    rng = np.random.default_rng(seed)
    zeta = chart.zeta
    bound = math.sqrt(zeta - 1.0) * 2.0
    Z = rng.normal(size=(n_points, 4))
    X = np.array([xf_field(chart, z) for z in Z])
    gxx = metric_g(chart, Z, X, X)
    xf_err = float(np.max(np.abs(gxx - (1.0 - zeta))))
    curves = random_timelike_curves(chart, n_curves, seed=seed)
    lengths = np.array([g_length(chart, c) for c in curves])
    z0 = level_point(chart, rng, -1.0)
    line = g_length(chart, gradient_line(chart, z0))
    z1 = rng.normal(size=4)
    inv = [flow_invariant(gradient_flow(FlowParams(chart, tuple(z1), t))) for t in (-1.0, 0.0, 0.5, 2.0)]
    inv_err = float(np.max(np.abs(np.array(inv) - inv[1])))
    return {
        "xf_speed": (xf_err <= 1e-12, xf_err),
        "max_random_length": (bool(lengths.max() <= bound + 1e-9), float(lengths.max())),
        "gradient_line_length": (abs(line - bound) <= 1e-6, line),
        "flow_invariant_x1y1": (inv_err <= 1e-9, inv_err),
    }
