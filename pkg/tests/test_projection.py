import math

import numpy as np
import pytest
from conftest import lift_cos_bruteforce
from hypothesis import given, settings
from hypothesis import strategies as st

from morse_causal.chart import CausalClass, MorseChart
from morse_causal.errors import NonpositiveY, OnStableManifold, UnsupportedZeta, ZeroVector
from morse_causal.projection import (
    BarrierSign,
    barrier_product,
    barrier_sign,
    classify_plane,
    closed_form_spacelike,
    oriented_timelike,
    plane_point,
    plane_residual,
    project_pi,
    project_rho,
    push_forward,
)

coord = st.floats(-3, 3, allow_nan=False)
angle = st.floats(0, 2 * math.pi, allow_nan=False)


class TestProjectionMaps:
    def test_rho_and_pi(self):
        x, r = project_rho([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(x, [1.0, 2.0])
        assert r == 5.0
        np.testing.assert_allclose(plane_point([1.0, 2.0, 3.0, 4.0]), [0.2, 0.4])

    def test_errors(self):
        with pytest.raises(OnStableManifold):
            project_rho([1.0, 0.0, 0.0, 0.0])
        with pytest.raises(NonpositiveY):
            project_pi([1.0, 0.0], 0.0)

    def test_push_forward_matches_finite_difference(self, rng):
        for _ in range(20):
            z = rng.normal(size=4)
            w = rng.normal(size=4)
            h = 1e-6
            fd = (plane_point(z + h * w) - plane_point(z - h * w)) / (2 * h)
            np.testing.assert_allclose(push_forward(z, w), fd, rtol=1e-6, atol=1e-8)

    def test_requires_zeta2(self):
        with pytest.raises(UnsupportedZeta):
            classify_plane(MorseChart(8.0, 3.0), [0.0, 0.0], [1.0, 0.0])


class TestPlaneResidual:
    @settings(max_examples=200, deadline=None)
    @given(coord, coord, angle)
    def test_residual_sign_matches_lift_oracle(self, x1, x2, a):
        """Spacelike (residual > 0) iff no lift of either orientation is timelike."""
        ch = MorseChart(8.0, 2.0)
        p, d = np.array([x1, x2]), np.array([math.cos(a), math.sin(a)])
        r = plane_residual(ch, p, d)
        lhs_scale = 2 * barrier_product(ch, p, d) ** 2 + 1.0
        best = max(lift_cos_bruteforce(ch, p, d, 1), lift_cos_bruteforce(ch, p, d, -1))
        if abs(r) < 1e-3 * lhs_scale or abs(best - ch.cos_theta) < 1e-4:
            return
        assert (r > 0) == (best < ch.cos_theta)

    @settings(max_examples=200, deadline=None)
    @given(coord, coord, angle)
    def test_closed_form_agrees(self, x1, x2, a):
        ch = MorseChart(8.0, 2.0)
        p, d = np.array([x1, x2]), np.array([math.cos(a), math.sin(a)])
        r = plane_residual(ch, p, d)
        if abs(r) < 1e-6 * (1 + abs(2 * barrier_product(ch, p, d) ** 2)):
            return
        assert closed_form_spacelike(ch, p, d) == (r > 0)


class TestOrientedTimelike:
    @settings(max_examples=150, deadline=None)
    @given(coord, coord, angle, st.sampled_from([1, -1]))
    def test_matches_bruteforce(self, x1, x2, a, sigma):
        ch = MorseChart(8.0, 2.0)
        p, d = np.array([x1, x2]), np.array([math.cos(a), math.sin(a)])
        best = lift_cos_bruteforce(ch, p, d, sigma)
        if abs(best - ch.cos_theta) < 1e-4:
            return
        assert bool(oriented_timelike(ch, p, d, sigma)) == (best > ch.cos_theta)

    def test_shrink_is_monotone(self, chart8, rng):
        P = rng.uniform(-3, 3, size=(500, 2))
        a = rng.uniform(0, 2 * math.pi, 500)
        D = np.stack([np.cos(a), np.sin(a)], axis=1)
        inner = oriented_timelike(chart8, P, D, -1, 0.02)
        exact = oriented_timelike(chart8, P, D, -1, 0.0)
        outer = oriented_timelike(chart8, P, D, -1, -0.02)
        assert np.all(inner <= exact) and np.all(exact <= outer)


class TestClassifyPlane:
    def test_origin_horizontal_is_future(self, chart8):
        c = classify_plane(chart8, [0.0, 0.0], [1.0, 0.0])
        assert c.label is CausalClass.TimelikePos

    def test_spacelike_barrier_example(self, chart8):
        p, v = [1.41421356, 0.0], [0.0, 1.0]
        assert classify_plane(chart8, p, v).label is CausalClass.Spacelike
        assert barrier_sign(chart8, p, v) is BarrierSign.PositiveBarrier
        assert barrier_sign(chart8, p, [0.0, -1.0]) is BarrierSign.NegativeBarrier

    def test_timelike_is_not_barrier(self, chart8):
        assert barrier_sign(chart8, [0.0, 0.0], [1.0, 0.0]) is BarrierSign.NotBarrier

    def test_zero_vector(self, chart8):
        with pytest.raises(ZeroVector):
            classify_plane(chart8, [0.0, 0.0], [0.0, 0.0])

    @settings(max_examples=100, deadline=None)
    @given(coord, coord, angle)
    def test_reversal_flips_orientation(self, x1, x2, a):
        ch = MorseChart(8.0, 2.0)
        p, d = np.array([x1, x2]), np.array([math.cos(a), math.sin(a)])
        c1, c2 = classify_plane(ch, p, d), classify_plane(ch, p, -d)
        assert c1.margin == pytest.approx(c2.margin)
        if c1.label is CausalClass.Spacelike:
            assert c2.label is CausalClass.Spacelike
