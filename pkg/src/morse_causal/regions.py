"""Partition of the plane y = 1 into Omega+, Omega-, C and tracing of the
quartic boundary

    F(p) = 2 (1 - x1^2 - b x2^2)^2 - (x1^2 + b^2 x2^2 + 1)(x1^2 + x2^2 + 1).

F > 0 on Omega+ and Omega- (rho timelike), F < 0 on C, F = 0 on the boundary.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .chart import CausalClass, MorseChart, classify4
from .errors import ComponentNotFound, DegenerateRoots
from .projection import require_zeta2

SQRT2 = math.sqrt(2.0)
COMPONENTS = ("oval", "right", "left", "top", "bottom")
TRACE_TOL = 1e-9
ARC_RADIUS = 20.0
BISECT_ITERS = 80


class RegionLabel(enum.Enum):
    OmegaPlus = "OmegaPlus"
    OmegaMinus = "OmegaMinus"
    ScriptC = "ScriptC"
    Boundary = "Boundary"


def _terms(b, p):
    p = np.asarray(p, dtype=float)
    x1, x2 = p[..., 0], p[..., 1]
    u = 1.0 - x1 * x1 - b * x2 * x2
    G = x1 * x1 + b * b * x2 * x2 + 1.0
    H = x1 * x1 + x2 * x2 + 1.0
    return x1, x2, u, G, H


def boundary_residual(chart: MorseChart, p):
    require_zeta2(chart)
    _, _, u, G, H = _terms(chart.b, p)
    return 2.0 * u * u - G * H


def residual_scale(chart: MorseChart, p):
    """Magnitude of the two competing terms; the trace tolerance is relative
    to it (it is ~1 on the oval and grows like |p|^4 on the arcs)."""
    _, _, u, G, H = _terms(chart.b, p)
    return np.maximum(1.0, np.maximum(2.0 * u * u, G * H))


def residual_gradient(chart: MorseChart, p) -> np.ndarray:
    b = chart.b
    x1, x2, u, G, H = _terms(b, p)
    g1 = -8.0 * u * x1 - 2.0 * x1 * (H + G)
    g2 = -8.0 * b * u * x2 - 2.0 * x2 * (b * b * H + G)
    return np.stack([g1, g2], axis=-1)


def classify_region(chart: MorseChart, p) -> RegionLabel:
    require_zeta2(chart)
    z = np.array([p[0], p[1], 1.0, 0.0])
    c = classify4(chart, z, z)
    return {
        CausalClass.TimelikePos: RegionLabel.OmegaPlus,
        CausalClass.TimelikeNeg: RegionLabel.OmegaMinus,
        CausalClass.Spacelike: RegionLabel.ScriptC,
        CausalClass.Lightlike: RegionLabel.Boundary,
    }[c.label]


def region_labels(chart: MorseChart, P) -> np.ndarray:
    """Vectorized labels as small ints: 1 Omega+, -1 Omega-, 0 C (boundary
    points are resolved by the sign of F, ties go to C)."""
    F = boundary_residual(chart, P)
    P = np.asarray(P, dtype=float)
    s = 1.0 - P[..., 0] ** 2 - chart.b * P[..., 1] ** 2
    out = np.zeros(F.shape, dtype=np.int8)
    out[(F > 0) & (s > 0)] = 1
    out[(F > 0) & (s < 0)] = -1
    return out


def beta_roots(b: float) -> tuple[float, float]:
    """Positive roots of b^2 s^4 - (b^2 + 4b + 1) s^2 + 1 (boundary on the x2-axis)."""
    if not b > 0:
        raise DegenerateRoots(f"b must be positive, got {b}")
    s = b * b + 4.0 * b + 1.0
    disc = s * s - 4.0 * b * b
    if disc < 0:
        raise DegenerateRoots(f"negative discriminant at b={b}")
    r = math.sqrt(disc)
    hi2 = (s + r) / (2.0 * b * b)
    lo2 = 2.0 / (s + r)  # product of the two roots is 1/b^2
    return math.sqrt(lo2), math.sqrt(hi2)


@dataclass
class BoundaryTrace:
    component: str
    points: np.ndarray  # (n, 2)
    s: np.ndarray  # parameter: angle for the oval, signed arclength for arcs
    residual: np.ndarray

    def __len__(self):
        return len(self.points)

    def tangents(self, chart: MorseChart) -> np.ndarray:
        """Unit tangents from the implicit gradient, oriented with the ordering."""
        g = residual_gradient(chart, self.points)
        t = np.stack([g[:, 1], -g[:, 0]], axis=-1)
        t /= np.linalg.norm(t, axis=-1, keepdims=True)
        fd = np.gradient(self.points, axis=0)
        flip = np.sum(t * fd, axis=-1) < 0
        t[flip] *= -1
        return t

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "s", "x1", "x2", "residual"])
        for s, (x1, x2), r in zip(self.s, self.points, self.residual):
            w.writerow([self.component, repr(float(s)), repr(float(x1)), repr(float(x2)), repr(float(r))])
        return buf.getvalue() if fh is None else ""


def _bisect_segment(chart, a, c):
    """Vectorized bisection for F = 0 between points a and c with opposite signs."""
    fa = boundary_residual(chart, a)
    for _ in range(BISECT_ITERS):
        m = 0.5 * (a + c)
        fm = boundary_residual(chart, m)
        same = (np.sign(fm) == np.sign(fa))[..., None]
        a = np.where(same, m, a)
        fa = np.where(same[..., 0], fm, fa)
        c = np.where(same, c, m)
    fa = boundary_residual(chart, a)
    fc = boundary_residual(chart, c)
    return np.where((np.abs(fa) <= np.abs(fc))[..., None], a, c)


def _trace_oval(chart, n):
    phi = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    if n >= 8:
        for ax in (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi):
            phi[np.argmin(np.abs(phi - ax))] = ax
    u = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    r_hi = np.full(n, np.nan)
    for r in np.arange(0.005, 3.0, 0.005):
        neg = boundary_residual(chart, r * u) < 0
        r_hi = np.where(np.isnan(r_hi) & neg, r, r_hi)
    if np.any(np.isnan(r_hi)):
        raise ComponentNotFound("oval not closed within radius 3")
    pts = _bisect_segment(chart, (r_hi - 0.005)[:, None] * u, r_hi[:, None] * u)
    # exact apices where the sample hits an axis
    lo, _ = beta_roots(chart.b)
    ex = {0.0: (SQRT2 - 1, 0.0), 0.5 * math.pi: (0.0, lo), math.pi: (-(SQRT2 - 1), 0.0), 1.5 * math.pi: (0.0, -lo)}
    for k, ph in enumerate(phi):
        if float(ph) in ex:
            pts[k] = ex[float(ph)]
    return pts, phi


def _arc_apex(chart, component):
    _, hi = beta_roots(chart.b)
    a = SQRT2 + 1.0
    return {
        "right": (np.array([a, 0.0]), np.array([0.0, 1.0])),
        "left": (np.array([-a, 0.0]), np.array([0.0, -1.0])),
        "top": (np.array([0.0, hi]), np.array([-1.0, 0.0])),
        "bottom": (np.array([0.0, -hi]), np.array([1.0, 0.0])),
    }[component]


def _newton_correct(chart, P, iters=8):
    """Newton steps along the gradient direction onto F = 0 (continuation)."""
    for _ in range(iters):
        g = residual_gradient(chart, P)
        f = float(boundary_residual(chart, P))
        gg = float(g @ g)
        if gg == 0:
            break
        P = P - f * g / gg
    return P


def _correct_many(chart, P, h):
    """Project many points onto F = 0 by bisection along their normals."""
    g = residual_gradient(chart, P)
    n = g / np.linalg.norm(g, axis=-1, keepdims=True)
    h = np.full(len(P), float(h))
    for _ in range(40):
        a, c = P - h[:, None] * n, P + h[:, None] * n
        ok = np.sign(boundary_residual(chart, a)) != np.sign(boundary_residual(chart, c))
        if ok.all():
            return _bisect_segment(chart, a, c)
        h = np.where(ok, h, 2.0 * h)
    raise ComponentNotFound("lost the boundary during continuation")


def _continue_branch(chart, apex, direction, radius, axis=None):
    """Follow F = 0 from the apex; stops early (returning the crossing point)
    if coordinate ``axis`` changes sign."""
    pts = [apex]
    tdir = direction
    P = apex
    while True:
        ds = 0.01 * (1.0 + np.linalg.norm(P))
        g = residual_gradient(chart, P)
        t = np.array([g[1], -g[0]])
        nt = np.linalg.norm(t)
        t = tdir if nt == 0 else t / nt
        if np.dot(t, tdir) < 0:
            t = -t
        Q = _newton_correct(chart, P + ds * t)
        if np.linalg.norm(Q) > radius:
            break
        tdir = (Q - P) / np.linalg.norm(Q - P)
        P = Q
        pts.append(P)
        if axis is not None and np.sign(P[axis]) != np.sign(apex[axis]):
            break
        if len(pts) > 200000:
            raise ComponentNotFound("continuation did not leave the disc")
    return np.array(pts)


def _trace_arc(chart, component, n, radius):
    apex, t0 = _arc_apex(chart, component)
    horiz = component in ("right", "left")
    branches = []
    for sgn in (-1.0, 1.0):
        br = _continue_branch(chart, apex, sgn * t0, radius, 0 if horiz else 1)
        # the island is a wedge around its own axis: a branch that crosses
        # the other axis means the arcs have merged
        coord = br[:, 0] if horiz else br[:, 1]
        if np.any(np.sign(coord) != np.sign(coord[0])):
            raise ComponentNotFound(f"{component} arc merges with a neighbour at b={chart.b}")
        branches.append(br)
    out_pts, out_s = [], []
    n_lo = (n - 1) // 2
    counts = (n_lo, n - 1 - n_lo)
    for sgn, br, m in zip((-1.0, 1.0), branches, counts):
        seg = np.linalg.norm(np.diff(br, axis=0), axis=-1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, arc[-1], m + 1)[1:]
        guess = np.stack([np.interp(targets, arc, br[:, 0]), np.interp(targets, arc, br[:, 1])], axis=-1)
        P = _correct_many(chart, guess, 1e-3)
        out_pts.append(P if sgn > 0 else P[::-1])
        out_s.append(targets if sgn > 0 else -targets[::-1])
    pts = np.vstack([out_pts[0], apex[None, :], out_pts[1]])
    s = np.concatenate([out_s[0], [0.0], out_s[1]])
    return pts, s


def trace_boundary(chart: MorseChart, component: str, n_samples: int = 1000,
                   radius: float = ARC_RADIUS) -> BoundaryTrace:
    require_zeta2(chart)
    if component not in COMPONENTS:
        raise ComponentNotFound(f"unknown component {component!r}; choose from {COMPONENTS}")
    if n_samples < 3:
        raise ValueError("need at least 3 samples")
    if component == "oval":
        pts, s = _trace_oval(chart, n_samples)
    else:
        pts, s = _trace_arc(chart, component, n_samples, radius)
    res = boundary_residual(chart, pts)
    bad = np.abs(res) > TRACE_TOL * residual_scale(chart, pts)
    if np.any(bad):
        raise ComponentNotFound(f"{component}: {int(bad.sum())} samples failed the residual tolerance")
    return BoundaryTrace(component, pts, np.asarray(s, dtype=float), res)


def apices(b: float) -> np.ndarray:
    """The four x1-axis apices (+-(sqrt2 +- 1), 0); independent of b."""
    a, c = SQRT2 - 1.0, SQRT2 + 1.0
    return np.array([[a, 0.0], [-a, 0.0], [c, 0.0], [-c, 0.0]])
