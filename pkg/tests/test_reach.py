import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import brentq

from morse_causal.barrier import P_POINT, Q_POINT, PlaneCurve
from morse_causal.chart import CausalClass, MorseChart
from morse_causal.errors import CrossingMissed, PitchTooSteep, SeedOutsideDomain, TangencyUnresolved
from morse_causal.projection import oriented_timelike
from morse_causal.reach import (
    STENCIL16,
    Orientation,
    ReachGrid,
    _edges_for,
    cell_centers,
    chord_timelike,
    collar_ok,
    crossing_check,
    escape_crossing_height,
    hyperbolic_escape,
    lift_plane_curve,
    lightlike_eigen_residual,
    monte_carlo_curves,
    omega_plus_targets,
    push_up,
    reach_grid,
    rotation,
    spiral_connect,
    spiral_pitch_class,
)

SMALL = dict(domain=(-4.0, 4.0, -4.0, 4.0), resolution=(160, 160))


def crossing_height_oracle(eps_hat):
    W = rotation(math.pi / 4 - eps_hat) @ np.diag([-1.0, 1.0])
    z0 = np.array([math.sqrt(2) + 1, 1.0])
    t = brentq(lambda s: (expm(W * s) @ z0)[0], 0.0, 60.0, xtol=1e-14)
    return (expm(W * t) @ z0)[1]


@pytest.fixture(scope="module")
def mc_curves():
    return monte_carlo_curves(MorseChart(8.0, 2.0), n_curves=20, length=2.0, seed=7)


class TestEscape:
    def test_eigen_identity(self):
        assert np.max(np.abs(lightlike_eigen_residual())) <= 1e-15

    def test_escape_is_timelike(self, chart8):
        c = hyperbolic_escape(chart8, 1.0, 1e-3)
        assert c.all_of(chart8, CausalClass.TimelikePos)
        np.testing.assert_allclose(c.points[0], [math.sqrt(2) + 1, 0, 1, 0])
        assert c.points[-1][0] == 0.0

    @pytest.mark.parametrize("eps_hat", [1e-2, 1e-4, 1e-6])
    def test_crossing_height_matches_linear_oracle(self, eps_hat):
        assert escape_crossing_height(eps_hat) == pytest.approx(crossing_height_oracle(eps_hat), rel=1e-8)

    def test_crossing_height_decreases(self):
        h = [escape_crossing_height(e) for e in (1e-2, 1e-3, 1e-4, 1e-6)]
        assert all(a > b > 0 for a, b in zip(h, h[1:]))

    def test_trust_region(self, chart8):
        # the crossing height scales like sqrt(eps_hat), not eps_hat
        with pytest.raises(CrossingMissed):
            hyperbolic_escape(chart8, 0.1, 1e-4)


class TestSpiral:
    def test_radial_ray(self, chart8):
        c = spiral_connect(chart8, 0.01, 0.1, 0.0)
        assert c.all_of(chart8, CausalClass.TimelikePos)

    def test_wide_spiral(self, chart8):
        c = spiral_connect(chart8, 0.001, 1.0, 2 * math.pi)
        assert c.all_of(chart8, CausalClass.TimelikePos)
        assert c.points[-1][2] == pytest.approx(1.0)

    @pytest.mark.parametrize("r0", [0.099, 0.01])
    def test_pitch_too_steep(self, chart8, r0):
        # ln(0.1/0.01) = 2.30 < 2 pi: pitch 69.9 degrees
        with pytest.raises(PitchTooSteep):
            spiral_connect(chart8, r0, 0.1, 2 * math.pi)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-3, 1.0), st.floats(1.01, 1e4), st.floats(-10, 10))
    def test_pitch_class_matches_midpoints(self, r0, ratio, dphi):
        ch = MorseChart(8.0, 2.0)
        cls = spiral_pitch_class(ch, r0, r0 * ratio, dphi)
        if abs(cls.margin) < 1e-6:
            return
        if cls.label is CausalClass.TimelikePos:
            assert spiral_connect(ch, r0, r0 * ratio, dphi, n=20).all_of(ch, CausalClass.TimelikePos)
        else:
            with pytest.raises(PitchTooSteep):
                spiral_connect(ch, r0, r0 * ratio, dphi)


class TestPushUp:
    def test_targets_reached_timelike(self, chart8):
        P, Y, u = omega_plus_targets(chart8, 4, seed=3)
        for k in range(4):
            c = push_up(chart8, P[k], Y[k], u[k], n=120)
            assert c.all_of(chart8, CausalClass.TimelikePos)
            target = Y[k] * np.array([P[k][0], P[k][1], math.cos(u[k]), math.sin(u[k])])
            np.testing.assert_allclose(c.points[-1], target, atol=1e-9)
            np.testing.assert_allclose(c.points[0], [math.sqrt(2) + 1, 0, 1, 0])


class TestReachGrid:
    def test_seed_outside(self, chart8):
        with pytest.raises(SeedOutsideDomain):
            reach_grid(chart8, (5.0, 0.0), **SMALL)

    def test_future_of_origin_in_omega_plus(self, chart8):
        g = reach_grid(chart8, (0.0, 0.0), Orientation.Future, **SMALL)
        i, j = g.cell_of((0.0, 0.0))
        assert g.labels[i, j]
        assert g.labels[i - 1:i + 2, j - 1:j + 2].all()
        assert collar_ok(chart8, g, 0.1)

    @pytest.mark.parametrize("m", [0.01, 0.02])
    @pytest.mark.parametrize("seed", [Q_POINT, P_POINT])
    def test_sandwich(self, chart8, seed, m):
        inner, exact, outer = (reach_grid(chart8, seed, Orientation.Past, margin=x, **SMALL) for x in (m, 0.0, -m))
        assert not np.any(inner.labels & ~exact.labels)
        assert not np.any(exact.labels & ~outer.labels)

    def test_resolution_monotone(self, chart8):
        for seed in (Q_POINT, P_POINT):
            c = reach_grid(chart8, seed, Orientation.Past, resolution=(80, 80))
            f = reach_grid(chart8, seed, Orientation.Past, resolution=(160, 160))
            kids = f.labels.reshape(80, 2, 80, 2).any(axis=(1, 3))
            assert not np.any(c.labels & ~kids)

    def test_fixed_point(self, chart8):
        g = reach_grid(chart8, Q_POINT, Orientation.Past, **SMALL)
        X, Y = cell_centers(g.domain, g.resolution)
        C = np.stack([X, Y], axis=-1)
        hx, hy = g.spacing
        nx, ny = g.resolution
        flat = g.labels.ravel()
        for di, dj in STENCIL16:
            src, dst = _edges_for((chart8, C, np.array([di * hx, dj * hy]), (di, dj), -1, 0.01, True))
            assert not np.any(flat[src] & ~flat[dst])

    def test_thread_count_does_not_matter(self, chart8, monkeypatch):
        monkeypatch.setenv("MORSE_CAUSAL_THREADS", "1")
        a = reach_grid(chart8, Q_POINT, Orientation.Past, **SMALL)
        monkeypatch.setenv("MORSE_CAUSAL_THREADS", "4")
        b = reach_grid(chart8, Q_POINT, Orientation.Past, **SMALL)
        assert np.array_equal(a.labels, b.labels)

    def test_inner_past_of_p_stays_outside_wedge(self, chart8, drift_cert):
        g = reach_grid(chart8, P_POINT, Orientation.Past, resolution=(200, 200))
        X, Y = g.centers()
        inside = (X > 0.5) & (np.abs(Y) < 0.102 * np.sqrt(1 + 6 * X ** 2))
        assert not np.any(g.labels & inside)

    def test_rle_roundtrip(self, chart8):
        g = reach_grid(chart8, Q_POINT, Orientation.Past, **SMALL)
        data = g.to_rle()
        assert data[:4] == b"MRCH"
        assert struct.unpack("<HHH", data[4:10]) == (1, 160, 160)
        assert len(data[:16]) == 16
        back = ReachGrid.from_rle(data)
        assert np.array_equal(back.labels, g.labels)
        assert back.domain == g.domain and back.seed == g.seed and back.orientation is g.orientation
        assert back.to_rle() == data

    def test_rle_starting_reached(self):
        labels = np.zeros((4, 4), dtype=bool)
        labels[0, :2] = True
        g = ReachGrid((0.0, 1.0, 0.0, 1.0), (4, 4), labels, (0.1, 0.1), Orientation.Future, 0.0)
        assert np.array_equal(ReachGrid.from_rle(g.to_rle()).labels, labels)

    def test_csv(self, chart8):
        g = reach_grid(chart8, Q_POINT, Orientation.Past, resolution=(20, 20))
        lines = g.to_csv().splitlines()
        assert lines[0] == "x1,x2,label" and len(lines) == 401
        assert sum(l.endswith(",Reached") for l in lines) == g.reached_count


class TestCrossing:
    def test_monte_carlo_curves_are_timelike(self, chart8, mc_curves):
        assert all(chord_timelike(chart8, c, Orientation.Past) for c in mc_curves)

    def test_monte_carlo_no_forbidden(self, drift_cert, mc_curves):
        assert not any(crossing_check(drift_cert, c).forbidden for c in mc_curves)

    def test_constructed_violation(self, drift_cert):
        t = np.linspace(0.0, 1.0, 200)
        left = PlaneCurve(t, np.column_stack([0.5 - 1.5 * t, np.full_like(t, 0.05)]), None)
        right = PlaneCurve(t, left.points[::-1].copy(), None)
        r = crossing_check(drift_cert, left, Orientation.Future)
        assert r.forbidden and str(r).startswith("ForbiddenCrossingAt(")
        assert crossing_check(drift_cert, right, Orientation.Past).forbidden
        assert not crossing_check(drift_cert, left, Orientation.Past).forbidden

    def test_barrier_against_itself(self, drift_cert):
        bar, _ = drift_cert.polyline()
        r = crossing_check(drift_cert, bar)
        assert str(r) == "NoForbiddenCrossing"

    def test_tangency(self, drift_cert):
        bar, _ = drift_cert.polyline()
        k = len(bar) - 100
        a, b = bar.points[k], bar.points[k + 1]
        c = PlaneCurve([0.0, 1.0], [a + [0, -1e-12], b + [0, 1e-12]], None)
        with pytest.raises(TangencyUnresolved):
            crossing_check(drift_cert, c)

    def test_lifts_are_timelike(self, chart8, mc_curves):
        for c in mc_curves:
            lift = lift_plane_curve(chart8, c, Orientation.Past)
            assert lift.all_of(chart8, CausalClass.TimelikeNeg)
            np.testing.assert_allclose(lift.projected().points, c.points, atol=1e-12)

    def test_steering_respects_cone(self, chart8, mc_curves):
        for c in mc_curves:
            d = np.diff(c.points, axis=0)
            assert np.all(oriented_timelike(chart8, c.points[:-1] + 0.5 * d, d, -1))
