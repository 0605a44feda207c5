import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morse_causal.chart import MorseChart, metric_g, morse_f
from morse_causal.errors import CriticalPoint, NotTimelike
from morse_causal.geodesics import (
    FlowParams,
    appendix_checks,
    flow_invariant,
    g_length,
    gradient_flow,
    gradient_line,
    level_point,
    random_timelike_curves,
    xf_field,
)
from morse_causal.reach import Curve4

coord = st.floats(-3, 3, allow_nan=False)
z4 = st.tuples(coord, coord, coord, coord)


def curve_from_points(P, t=None):
    P = np.asarray(P, dtype=float)
    t = np.arange(len(P), dtype=float) if t is None else np.asarray(t, dtype=float)
    Pm = 0.5 * (P[1:] + P[:-1])
    return Curve4(t, P, Pm, np.diff(P, axis=0) / np.diff(t)[:, None])


class TestFlow:
    def test_identity_at_zero(self, chart8):
        z = (1.0, 2.0, 3.0, 4.0)
        np.testing.assert_array_equal(gradient_flow(FlowParams(chart8, z, 0.0)), z)

    def test_example(self, chart8):
        np.testing.assert_allclose(gradient_flow(FlowParams(chart8, (1.0, 0, 0, 0), 1.0)), [math.exp(-1), 0, 0, 0])

    @settings(max_examples=100, deadline=None)
    @given(z4, st.floats(-1, 1), st.floats(-1, 1))
    def test_semigroup(self, z, s, t):
        ch = MorseChart(8.0, 2.0)
        a = gradient_flow(FlowParams(ch, tuple(gradient_flow(FlowParams(ch, z, t))), s))
        b = gradient_flow(FlowParams(ch, z, s + t))
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(z4, st.floats(-3, 3))
    def test_x1y1_invariant(self, z, t):
        ch = MorseChart(8.0, 2.0)
        assert flow_invariant(gradient_flow(FlowParams(ch, z, t))) == pytest.approx(flow_invariant(z), abs=1e-9)

    def test_flow_solves_ode(self, chart8, rng):
        z = rng.normal(size=4)
        h = 1e-6
        fd = (gradient_flow(FlowParams(chart8, tuple(z), h)) - gradient_flow(FlowParams(chart8, tuple(z), -h))) / (2 * h)
        np.testing.assert_allclose(fd, chart8.A * z, rtol=1e-8)


class TestXf:
    def test_examples(self, chart8):
        np.testing.assert_allclose(xf_field(chart8, [1.0, 0, 0, 0]), [-1.0, 0, 0, 0])
        np.testing.assert_allclose(xf_field(chart8, [0, 1.0, 0, 0]), [0, -1 / 8, 0, 0])

    def test_critical_point(self, chart8):
        with pytest.raises(CriticalPoint):
            xf_field(chart8, np.zeros(4))

    @settings(max_examples=200, deadline=None)
    @given(z4, st.floats(1.1, 5.0))
    def test_constant_speed(self, z, zeta):
        ch = MorseChart(8.0, zeta)
        if np.linalg.norm(z) < 1e-3:
            return
        X = xf_field(ch, z)
        assert metric_g(ch, np.array(z), X, X) == pytest.approx(1 - zeta, abs=1e-12)


class TestLength:
    def test_constant_curve(self, chart8):
        assert g_length(chart8, curve_from_points([[1.0, 0, 1, 0]] * 5)) == 0.0

    def test_spacelike_raises(self, chart8):
        with pytest.raises(NotTimelike):
            g_length(chart8, curve_from_points([[1.0, 0, 1, 0], [1.0, 1.0, 1, 0]]))

    @pytest.mark.parametrize("zeta", [1.5, 2.0, 4.0])
    def test_gradient_line_attains_bound(self, rng, zeta):
        ch = MorseChart(8.0, zeta)
        z0 = level_point(ch, rng, -1.0)
        assert g_length(ch, gradient_line(ch, z0)) == pytest.approx(math.sqrt(zeta - 1) * 2, abs=1e-6)

    def test_reparametrization_invariant(self, chart8, rng):
        z0 = level_point(chart8, rng, -1.0)
        c = gradient_line(chart8, z0, n=2001)
        c2 = Curve4(c.t ** 3 + 5 * c.t, c.points, c.mid_points, c.mid_velocities)
        assert g_length(chart8, c2) == pytest.approx(g_length(chart8, c), rel=1e-12)

    def test_random_curves_below_bound(self, chart8):
        curves = random_timelike_curves(chart8, 100, seed=11)
        for c in curves:
            assert morse_f(chart8, c.points[0]) == pytest.approx(-1.0)
            assert morse_f(chart8, c.points[-1]) == pytest.approx(1.0, abs=1e-12)
            assert g_length(chart8, c) <= 2.0 + 1e-9

    def test_appendix_checks(self, chart8):
        checks = appendix_checks(chart8, 200, 100, seed=5)
        assert all(ok for ok, _ in checks.values())
