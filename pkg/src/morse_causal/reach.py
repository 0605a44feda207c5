"""Futures and pasts: explicit timelike curves in R^4 and grid reachability
for the projected cone field on the plane y = 1."""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .barrier import Q_POINT, BarrierCertificate, PlaneCurve, barrier_wedge
from .chart import CausalClass, Classification, MorseChart, _label_from_cos, classify4
from .errors import CrossingMissed, PitchTooSteep, SeedOutsideDomain, TangencyUnresolved
from .parallel import ordered_map
from .projection import barrier_product, oriented_timelike, plane_point, require_zeta2
from .regions import SQRT2, boundary_residual

RLE_MAGIC = b"MRCH"
RLE_VERSION = 1
STENCIL16 = (
    (1, 0), (0, 1), (-1, 0), (0, -1),
    (1, 1), (-1, 1), (-1, -1), (1, -1),
    (2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1),
)


class Orientation(enum.Enum):
    Future = 1
    Past = -1

    @property
    def sigma(self) -> int:
        return self.value

    @property
    def label(self) -> CausalClass:
        return CausalClass.TimelikePos if self.value > 0 else CausalClass.TimelikeNeg


# --------------------------------------------------------------------------
# curves in R^4
# --------------------------------------------------------------------------

@dataclass
class Curve4:
    """Samples z(t) with the velocity at each step midpoint."""

    t: np.ndarray
    points: np.ndarray  # (n, 4)
    mid_points: np.ndarray  # (n-1, 4)
    mid_velocities: np.ndarray  # (n-1, 4)
    info: dict = field(default_factory=dict)

    def classify(self, chart: MorseChart) -> list:
        return [classify4(chart, z, v) for z, v in zip(self.mid_points, self.mid_velocities)]

    def all_of(self, chart: MorseChart, label: CausalClass) -> bool:
        return all(c.label is label for c in self.classify(chart))

    def then(self, other: "Curve4") -> "Curve4":
        """Concatenate; ``other`` must start where this curve ends."""
        if not np.allclose(self.points[-1], other.points[0], rtol=1e-9, atol=1e-12):
            raise ValueError("curves do not join")
        shift = self.t[-1] - other.t[0]
        return Curve4(
            np.concatenate([self.t, other.t[1:] + shift]),
            np.vstack([self.points, other.points[1:]]),
            np.vstack([self.mid_points, other.mid_points]),
            np.vstack([self.mid_velocities, other.mid_velocities]),
            {**self.info, **other.info},
        )

    def projected(self) -> PlaneCurve:
        pts = np.array([plane_point(z) for z in self.points])
        tang = np.gradient(pts, self.t, axis=0)
        return PlaneCurve(self.t.copy(), pts, tang)


def _sampled(fun_z, fun_v, t0, t1, n):
    t = np.linspace(t0, t1, n)
    tm = 0.5 * (t[1:] + t[:-1])
    return t, fun_z(t), fun_z(tm), fun_v(tm)


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def lightlike_eigen_residual() -> np.ndarray:
    """Rot(pi/4) grad f at (sqrt2 + 1, 1) in the x1 y1-plane, plus the point.
    Vanishes: the point is an eigenvector with eigenvalue -1."""
    q = np.array([SQRT2 + 1.0, 1.0])
    V = rotation(math.pi / 4) @ np.diag([-1.0, 1.0])
    return V @ q + q


def _embed_x1y1(xy):
    xy = np.atleast_2d(xy)
    z = np.zeros((len(xy), 4))
    z[:, 0] = xy[:, 0]
    z[:, 2] = xy[:, 1]
    return z


def hyperbolic_escape(chart: MorseChart, eps: float, eps_hat: float, n: int = 400,
                      t_limit: float = 60.0) -> Curve4:
    """Integrate W = Rot(pi/4 - eps_hat) grad f in the x1 y1-plane from
    q = (sqrt2 + 1, 0, 1, 0) until x1 = 0.  The crossing height must lie in
    (0, eps^2)."""
    require_zeta2(chart)
    if not (eps > 0 and 0 < eps_hat < math.pi / 4):
        raise ValueError("need eps > 0 and 0 < eps_hat < pi/4")
    W = rotation(math.pi / 4 - eps_hat) @ np.diag([-1.0, 1.0])

    def rhs(_, z):
        return W @ z

    def hit(_, z):
        return z[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (0.0, t_limit), [SQRT2 + 1.0, 1.0], method="DOP853",
                    rtol=1e-12, atol=1e-14, events=hit, dense_output=True)
    if sol.status != 1 or not len(sol.t_events[0]):
        raise CrossingMissed("trajectory did not reach the y1-axis")
    t_star = float(sol.t_events[0][0])
    h = float(sol.y_events[0][0][1])
    if not (0 < h < eps * eps):
        raise CrossingMissed(f"crossing height {h:.4g} outside (0, eps^2 = {eps * eps:.4g})")
    t, z, zm, vm = _sampled(lambda s: _embed_x1y1(sol.sol(s).T),
                            lambda s: _embed_x1y1((W @ sol.sol(s)).T), 0.0, t_star, n)
    z[-1] = [0.0, 0.0, h, 0.0]
    return Curve4(t, z, zm, vm, {"crossing_height": h, "crossing_time": t_star, "eps_hat": eps_hat})


def escape_crossing_height(eps_hat: float) -> float:
    """Crossing height of the push-off curve without the trust-region check."""
    return hyperbolic_escape(MorseChart(8.0, 2.0), 1e3, eps_hat).info["crossing_height"]


def spiral_pitch_class(chart: MorseChart, r0: float, r1: float, dphi: float) -> Classification:
    k = math.log(r1 / r0)
    cos = k / math.hypot(k, dphi)
    return _label_from_cos(cos, chart.cos_theta)


def spiral_connect(chart: MorseChart, r0: float, r1: float, dphi: float, phi0: float = 0.0,
                   n: int = 200) -> Curve4:
    """Logarithmic spiral in the plane x = 0 from radius r0 at angle phi0 to
    radius r1 at angle phi0 + dphi."""
    if not 0 < r0 < r1:
        raise ValueError("need 0 < r0 < r1")
    cls = spiral_pitch_class(chart, r0, r1, dphi)
    if cls.label is not CausalClass.TimelikePos:
        raise PitchTooSteep(
            f"pitch atan(|dphi|/ln(r1/r0)) = {math.degrees(math.atan2(abs(dphi), math.log(r1 / r0))):.2f} deg "
            f"is not below the cone angle {math.degrees(chart.theta):.2f} deg")
    k = math.log(r1 / r0)

    def z(s):
        r = r0 * np.exp(k * s)
        a = phi0 + dphi * s
        return np.stack([0 * s, 0 * s, r * np.cos(a), r * np.sin(a)], axis=-1)

    def v(s):
        r = r0 * np.exp(k * s)
        a = phi0 + dphi * s
        return np.stack([0 * s, 0 * s, r * (k * np.cos(a) - dphi * np.sin(a)),
                         r * (k * np.sin(a) + dphi * np.cos(a))], axis=-1)

    t, zz, zm, vm = _sampled(z, v, 0.0, 1.0, n)
    zz[-1, 2:] = r1 * math.cos(phi0 + dphi), r1 * math.sin(phi0 + dphi)
    return Curve4(t, zz, zm, vm, {"pitch": math.atan2(abs(dphi), k)})


def _growth_phase(P_T, u_ang, r, kappa, n):
    """Z(s) = r e^{kappa s} (s P_T, u): move the plane point from 0 to P_T."""
    P_T = np.asarray(P_T, dtype=float)
    u = np.array([math.cos(u_ang), math.sin(u_ang)])

    def z(s):
        y = r * np.exp(kappa * s)[:, None]
        return np.hstack([y * s[:, None] * P_T, y * u])

    def v(s):
        y = r * np.exp(kappa * s)[:, None]
        return np.hstack([y * (kappa * s[:, None] * P_T + P_T), y * kappa * u])

    return _sampled(z, v, 0.0, 1.0, n)


def _phase_ok(chart, zm, vm, label):
    return all(classify4(chart, a, b).label is label for a, b in zip(zm, vm))


def push_up(chart: MorseChart, P_T, Y: float, u_ang: float, n: int = 200,
            kappas=(1.0, 2.0, 3.0, 4.0, 6.0, 8.0)) -> Curve4:
    """Future timelike curve from q to the target z_T = Y (P_T, cos u, sin u)
    with P_T in Omega+: escape to the y1-axis, spiral in the y-plane to the
    target angle, grow while moving the plane point to P_T, then the ray."""
    require_zeta2(chart)
    dphi = (u_ang + math.pi) % (2 * math.pi) - math.pi
    pos = CausalClass.TimelikePos
    # growth phase: smallest kappa that keeps every midpoint timelike
    chosen = None
    for kappa in kappas:
        _, _, zm, vm = _growth_phase(P_T, dphi, 1.0, kappa, n)
        if _phase_ok(chart, zm, vm, pos):
            chosen = kappa
            break
    if chosen is None:
        raise ValueError("target too close to the boundary of Omega+")
    y_mid = 0.5 * Y  # radius where the ray starts
    r_b = y_mid * math.exp(-chosen)
    spiral_log = 1.2 * abs(dphi) + 0.2
    h_max = r_b * math.exp(-spiral_log)
    eps_hat = (h_max / 6.0) ** 2
    for _ in range(8):
        try:
            esc = hyperbolic_escape(chart, math.sqrt(h_max), eps_hat, n)
            break
        except CrossingMissed:
            eps_hat *= 0.1
    else:
        raise CrossingMissed("could not push off below the spiral start")
    h = esc.info["crossing_height"]
    spi = spiral_connect(chart, h, r_b, dphi, 0.0, n)
    t, z, zm, vm = _growth_phase(P_T, dphi, r_b, chosen, n)
    grow = Curve4(t, z, zm, vm)
    end = z[-1]
    d = end / np.linalg.norm(end[2:])  # (P_T, u) with unit y-part
    t = np.linspace(0.0, 1.0, n)
    tm = 0.5 * (t[1:] + t[:-1])
    lam = y_mid + (Y - y_mid) * t
    ray = Curve4(t, lam[:, None] * d, (y_mid + (Y - y_mid) * tm)[:, None] * d,
                 np.broadcast_to((Y - y_mid) * d, (n - 1, 4)).copy())
    ray.points[0] = end
    curve = esc.then(spi).then(grow).then(ray)
    curve.info.update({"kappa": chosen, "spiral_start": h, "target": Y * d})
    return curve


def omega_plus_targets(chart: MorseChart, n: int, seed: int = 0, shrink: float = 0.8):
    """Random targets Y (P, u): P uniform in angle and radius fraction within
    ``shrink`` of the oval boundary, Y in [0.5, 2], u uniform."""
    from .barrier import _oval_points

    rng = np.random.default_rng(seed)
    ang = rng.uniform(0.0, 2 * math.pi, n)
    frac = shrink * np.sqrt(rng.uniform(0.0, 1.0, n))
    P = _oval_points(chart, ang) * frac[:, None]
    Y = rng.uniform(0.5, 2.0, n)
    u = rng.uniform(0.0, 2 * math.pi, n)
    return P, Y, u


# --------------------------------------------------------------------------
# grid reachability
# --------------------------------------------------------------------------

@dataclass
class ReachGrid:
    domain: tuple  # (x_min, x_max, y_min, y_max)
    resolution: tuple  # (nx, ny)
    labels: np.ndarray  # bool (nx, ny), True = Reached
    seed: tuple
    orientation: Orientation
    margin: float

    @property
    def spacing(self):
        x0, x1, y0, y1 = self.domain
        nx, ny = self.resolution
        return (x1 - x0) / nx, (y1 - y0) / ny

    def centers(self):
        return cell_centers(self.domain, self.resolution)

    def cell_of(self, p):
        return cell_index(self.domain, self.resolution, p)

    @property
    def reached_count(self) -> int:
        return int(self.labels.sum())

    def overlap(self, other: "ReachGrid") -> int:
        return int(np.sum(self.labels & other.labels))

    def to_csv(self) -> str:
        X, Yc = self.centers()
        lines = ["x1,x2,label"]
        for x, y, l in zip(X.ravel(), Yc.ravel(), self.labels.ravel()):
            lines.append(f"{x!r},{y!r},{'Reached' if l else 'Unreached'}")
        return "\n".join(lines) + "\n"

    def to_rle(self) -> bytes:
        nx, ny = self.resolution
        flat = self.labels.ravel().astype(np.int8)
        change = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate([[0], change, [flat.size]])
        runs = np.diff(bounds).astype(np.uint32)
        if flat.size and flat[0]:
            runs = np.concatenate([[0], runs]).astype(np.uint32)
        head = RLE_MAGIC + struct.pack("<HHHBB4x", RLE_VERSION, nx, ny,
                                       0 if self.orientation is Orientation.Future else 1, 0)
        body = struct.pack("<4d", *self.domain) + struct.pack("<3d", *self.seed, self.margin)
        return head + body + struct.pack("<I", len(runs)) + runs.astype("<u4").tobytes()

    @classmethod
    def from_rle(cls, data: bytes) -> "ReachGrid":
        if data[:4] != RLE_MAGIC:
            raise ValueError("not an MRCH file")
        version, nx, ny, orient, _ = struct.unpack("<HHHBB4x", data[4:16])
        if version != RLE_VERSION:
            raise ValueError(f"unsupported version {version}")
        domain = struct.unpack("<4d", data[16:48])
        sx, sy, margin = struct.unpack("<3d", data[48:72])
        (nruns,) = struct.unpack("<I", data[72:76])
        runs = np.frombuffer(data[76:76 + 4 * nruns], dtype="<u4")
        vals = np.arange(nruns) % 2 == 1
        flat = np.repeat(vals, runs.astype(np.int64))
        return cls(domain, (nx, ny), flat.reshape(nx, ny), (sx, sy),
                   Orientation.Future if orient == 0 else Orientation.Past, margin)


def cell_centers(domain, resolution):
    x0, x1, y0, y1 = domain
    nx, ny = resolution
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    return np.meshgrid(xs, ys, indexing="ij")


def cell_index(domain, resolution, p):
    x0, x1, y0, y1 = domain
    nx, ny = resolution
    if not (x0 <= p[0] < x1 and y0 <= p[1] < y1):
        raise SeedOutsideDomain(f"{tuple(p)} not in {domain}")
    i = min(int(math.floor((p[0] - x0) / (x1 - x0) * nx)), nx - 1)
    j = min(int(math.floor((p[1] - y0) / (y1 - y0) * ny)), ny - 1)
    return i, j


def _edges_for(args):
    chart, C, d, off, sigma, shrink, inner = args
    nx, ny = C.shape[:2]
    di, dj = off
    Tc = oriented_timelike(chart, C, d, sigma, shrink)
    Tm = oriented_timelike(chart, C + 0.5 * d, d, sigma, shrink)
    i0, i1 = max(0, -di), nx - max(0, di)
    j0, j1 = max(0, -dj), ny - max(0, dj)
    a_c = Tc[i0:i1, j0:j1]
    a_m = Tm[i0:i1, j0:j1]
    b_c = Tc[i0 + di:i1 + di, j0 + dj:j1 + dj]
    ok = (a_c & a_m & b_c) if inner else (a_c | a_m | b_c)
    ii, jj = np.nonzero(ok)
    ii += i0
    jj += j0
    src = ii * ny + jj
    dst = (ii + di) * ny + (jj + dj)
    return src, dst


def reach_grid(chart: MorseChart, seed, orientation: Orientation = Orientation.Past,
               domain=(-4.0, 4.0, -4.0, 4.0), resolution=(800, 800), margin: float = 0.01,
               stencil=STENCIL16) -> ReachGrid:
    """Cells reachable from the seed cell along steps whose direction lies in
    the projected cone of the given orientation.

    margin >= 0 (inner approximation): cones shrunk by ``margin`` radians and
    the step direction must be timelike at its start, midpoint and end.
    margin < 0 (outer approximation): cones grown by ``-margin`` radians and
    it suffices that one of the three points admits the step.
    """
    require_zeta2(chart)
    nx, ny = resolution
    si, sj = cell_index(domain, resolution, seed)
    X, Yc = cell_centers(domain, resolution)
    C = np.stack([X, Yc], axis=-1)
    hx = (domain[1] - domain[0]) / nx
    hy = (domain[3] - domain[2]) / ny
    inner = margin >= 0
    jobs = [(chart, C, np.array([di * hx, dj * hy]), (di, dj), orientation.sigma, margin, inner)
            for di, dj in stencil]
    parts = ordered_map(_edges_for, jobs)
    src = np.concatenate([p[0] for p in parts])
    dst = np.concatenate([p[1] for p in parts])
    N = nx * ny
    G = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(N, N))
    order = breadth_first_order(G, si * ny + sj, directed=True, return_predecessors=False)
    labels = np.zeros(N, dtype=bool)
    labels[order] = True
    return ReachGrid(tuple(map(float, domain)), (nx, ny), labels.reshape(nx, ny),
                     (float(seed[0]), float(seed[1])), orientation, float(margin))


# --------------------------------------------------------------------------
# barrier crossings
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossingResult:
    forbidden: bool
    t: float | None = None
    point: tuple | None = None
    crossings: int = 0

    def __str__(self):
        return f"ForbiddenCrossingAt({self.t!r})" if self.forbidden else "NoForbiddenCrossing"


def crossing_check(certificate: BarrierCertificate, curve, orientation: Orientation = Orientation.Past,
                   b: float | None = None, angle_tol: float = 1e-6) -> CrossingResult:
    """Check every transversal crossing of ``curve`` with the barrier.

    A future-directed curve may cross a positive barrier only with
    det(barrier tangent, velocity) > 0, a negative one only with det < 0;
    the conditions flip for past-directed curves.
    """
    if isinstance(curve, Curve4):
        curve = curve.projected()
    b = certificate.params.get("b", 8.0) if b is None else b
    chart = MorseChart(b, 2.0)
    bar, _ = certificate.polyline()
    B = bar.points
    C = curve.points
    r = np.diff(B, axis=0)
    lo = C.min(axis=0)
    hi = C.max(axis=0)
    seg_lo = np.minimum(B[:-1], B[1:])
    seg_hi = np.maximum(B[:-1], B[1:])
    cand = np.nonzero(np.all(seg_hi >= lo - 1e-12, axis=1) & np.all(seg_lo <= hi + 1e-12, axis=1))[0]
    n_cross = 0
    if len(cand) == 0:
        return CrossingResult(False, None, None, 0)
    P0, R = B[cand], r[cand]
    tang_sign = np.sign(-barrier_product(chart, P0 + 0.5 * R, R))  # +1 positive barrier
    req = tang_sign * orientation.sigma
    for j in range(len(C) - 1):
        q0, w = C[j], C[j + 1] - C[j]
        den = R[:, 0] * w[1] - R[:, 1] * w[0]
        diff = q0 - P0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (diff[:, 0] * w[1] - diff[:, 1] * w[0]) / den
            u = (diff[:, 0] * R[:, 1] - diff[:, 1] * R[:, 0]) / den
        eps = 1e-12
        hit = (den != 0) & (s >= -eps) & (s < 1 - eps) & (u >= -eps) & (u < 1 - eps)
        # vertex-to-vertex touches (shared sample points) are not transversal
        touch = ((np.minimum(np.abs(s), np.abs(1 - s)) < 1e-9)
                 & (np.minimum(np.abs(u), np.abs(1 - u)) < 1e-9))
        hit &= ~touch
        for k in np.nonzero(hit)[0]:
            n_cross += 1
            sin_ang = abs(den[k]) / (np.linalg.norm(R[k]) * np.linalg.norm(w))
            if sin_ang < angle_tol:
                raise TangencyUnresolved(f"crossing angle {sin_ang:.3g} rad near curve sample {j}")
            if np.sign(den[k]) != req[k]:
                tt = float(curve.t[j] + u[k] * (curve.t[j + 1] - curve.t[j]))
                pt = tuple(map(float, q0 + u[k] * w))
                return CrossingResult(True, tt, pt, n_cross)
    return CrossingResult(False, None, None, n_cross)


# --------------------------------------------------------------------------
# Monte Carlo timelike plane curves and their lifts
# --------------------------------------------------------------------------

def cone_interval(chart: MorseChart, P, sigma: int):
    """Open timelike cone of orientation sigma at P as (full, centre, half)."""
    cen_w, delta, c = barrier_wedge(chart.b, float(P[0]), float(P[1]))
    if c > 1.0:
        return True, 0.0, math.pi
    half = 0.5 * (math.pi - delta)
    centre = cen_w + 0.5 * math.pi
    for cand in (centre, centre + math.pi):
        d = np.array([math.cos(cand), math.sin(cand)])
        if bool(oriented_timelike(chart, P, d, sigma)):
            return False, cand, half
    return True, 0.0, math.pi  # numerically on the boundary: treat as full


def steered_direction(chart, P, sigma, steer: float) -> float:
    full, centre, half = cone_interval(chart, P, sigma)
    if full:
        return 2.0 * math.pi * steer
    return centre + 0.9 * half * (2.0 * steer - 1.0)


def _chord_ok(chart, P, step, sigma) -> bool:
    return bool(oriented_timelike(chart, P + 0.5 * step, step, sigma))


def steered_curve(chart: MorseChart, start, steering, orientation: Orientation = Orientation.Past,
                  ds: float = 0.005, resample: float = 0.05) -> PlaneCurve:
    """Heun integration of the steered direction field; ``steering`` holds one
    value in (0, 1) per ``resample`` length units."""
    sig = orientation.sigma
    per = max(1, int(round(resample / ds)))
    P = np.asarray(start, dtype=float).copy()
    pts, tans = [P.copy()], []
    for k, st in enumerate(np.repeat(np.asarray(steering, dtype=float), per)):
        a1 = steered_direction(chart, P, sig, st)
        d1 = np.array([math.cos(a1), math.sin(a1)])
        a2 = steered_direction(chart, P + ds * d1, sig, st)
        d2 = np.array([math.cos(a2), math.sin(a2)])
        step = 0.5 * ds * (d1 + d2)
        if not _chord_ok(chart, P, step, sig):
            # leaving a full-cone region: the steering map jumps there
            am = steered_direction(chart, P + 0.5 * step, sig, st)
            step = ds * np.array([math.cos(am), math.sin(am)])
            if not _chord_ok(chart, P, step, sig):
                am = steered_direction(chart, P + 0.5 * step, sig, 0.5)
                step = ds * np.array([math.cos(am), math.sin(am)])
        P = P + step
        pts.append(P.copy())
        tans.append(d1)
    tans.append(tans[-1])
    pts = np.array(pts)
    return PlaneCurve(ds * np.arange(len(pts)), pts, np.array(tans))


def monte_carlo_curves(chart: MorseChart, start=Q_POINT, n_curves: int = 100, length: float = 2.0,
                       orientation: Orientation = Orientation.Past, seed: int = 0,
                       ds: float = 0.005, resample: float = 0.05) -> list:
    rng = np.random.default_rng(seed)
    n_steer = int(round(length / resample))
    steerings = [rng.uniform(0.0, 1.0, n_steer) for _ in range(n_curves)]
    return ordered_map(lambda s: steered_curve(chart, start, s, orientation, ds, resample), steerings)


def chord_timelike(chart: MorseChart, curve: PlaneCurve, orientation: Orientation) -> bool:
    P = curve.points
    d = np.diff(P, axis=0)
    return bool(np.all(oriented_timelike(chart, 0.5 * (P[1:] + P[:-1]), d, orientation.sigma)))


def _best_lift(chart, P, d, sigma):
    """Coefficient lam such that d + lam*rho makes the largest angle-margin
    with sigma*grad f (kept strictly inside the open half-plane of lifts)."""
    x1, x2 = P
    n = sigma * np.array([-x1, -chart.b * x2, 1.0])
    n /= np.linalg.norm(n)
    rho = np.array([x1, x2, 1.0])
    e1 = rho / np.linalg.norm(rho)
    d3 = np.array([d[0], d[1], 0.0])
    e2 = d3 - (d3 @ e1) * e1
    e2 /= np.linalg.norm(e2)
    a1, a2 = e1 @ n, e2 @ n
    R = math.hypot(a1, a2)
    if a2 > 0:
        alpha = min(max(math.atan2(a2, a1), 1e-3), math.pi - 1e-3)
    else:
        # sup at an open endpoint (the rho direction): aim for half its margin
        target = 0.5 * (abs(a1) + chart.cos_theta)
        if a1 > 0:
            alpha = math.atan2(a2, a1) + math.acos(min(target / R, 1.0))
        else:
            alpha = math.atan2(a2, a1) % (2 * math.pi) - math.acos(min(target / R, 1.0))
    w = math.cos(alpha) * e1 + math.sin(alpha) * e2
    coef, *_ = np.linalg.lstsq(np.stack([d3, rho], axis=1), w, rcond=None)
    return coef[1] / coef[0]


def lift_plane_curve(chart: MorseChart, curve: PlaneCurve, orientation: Orientation,
                     y0: float = 1.0) -> Curve4:
    """Lift to R^4 over the y-direction (1, 0): Z = y (P, 1, 0) with
    y'/y = lam chosen per segment so each step is timelike."""
    P = curve.points
    d = np.diff(P, axis=0)
    mids = 0.5 * (P[1:] + P[:-1])
    lam = np.array([_best_lift(chart, m, dd, orientation.sigma) for m, dd in zip(mids, d)])
    logy = np.concatenate([[0.0], np.cumsum(lam)]) + math.log(y0)
    y = np.exp(logy)
    Z = np.column_stack([y * P[:, 0], y * P[:, 1], y, np.zeros(len(P))])
    ym = np.exp(0.5 * (logy[1:] + logy[:-1]))
    Zm = np.column_stack([ym * mids[:, 0], ym * mids[:, 1], ym, np.zeros(len(mids))])
    V = ym[:, None] * np.column_stack([d[:, 0] + lam * mids[:, 0], d[:, 1] + lam * mids[:, 1], lam,
                                       np.zeros(len(mids))])
    return Curve4(curve.t.copy(), Z, Zm, V)


def collar_ok(chart: MorseChart, grid: ReachGrid, width: float) -> bool:
    """Reached cells lie in Omega+ or within ``width`` of its boundary."""
    X, Yc = grid.centers()
    P = np.stack([X[grid.labels], Yc[grid.labels]], axis=-1)
    F = boundary_residual(chart, P)
    s = 1.0 - P[:, 0] ** 2 - chart.b * P[:, 1] ** 2
    inside = (F > 0) & (s > 0)
    if inside.all():
        return True
    from .barrier import _oval_points

    ang = np.linspace(0, 2 * math.pi, 4000, endpoint=False)
    O = _oval_points(chart, ang)
    out = P[~inside]
    dist = np.min(np.linalg.norm(out[:, None, :] - O[None, :, :], axis=-1), axis=1)
    return bool(np.all(dist <= width))
