import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pathgen import circle_path, random_path

from berrycross.connection import (
    ConnectionMatrix,
    berry_loop_integral,
    connection_along,
    connection_analytic,
    connection_numeric,
    scaling_check,
    solid_angle,
)
from berrycross.errors import ContractError, DegeneracyError, SingularityError, StencilError
from berrycross.model import ParameterPath, constant_path, fourier_path, polar_track
from berrycross.scenarios import FieldSweepModel, build_field_path

TILTED_ELLIPSE = fourier_path(1.0, [0, 0.3, 0.2, 1.0], [[0], [1.0], [0], [0.4]], [[0], [0], [0.7], [0]])


class TestAnalytic:
    def test_equator_circle(self):
        w = 1.7
        a = connection_analytic(math.pi / 2, 0.0, w)
        assert a.pp == pytest.approx(w / 2)
        assert a.mm == pytest.approx(w / 2)
        assert a.pm == pytest.approx(w / 2)

    def test_north_pole(self):
        a = connection_analytic(0.0, 0.0, 2.5)
        assert (a.mm, a.pp, a.pm) == (0.0, 2.5, 0.0)

    def test_pure_theta_motion(self):
        a = connection_analytic(0.8, 1.0, 0.0)
        assert a.pp == 0 and a.mm == 0
        assert a.pm == 0.5j and a.mp == -0.5j
        assert a["+", "-"] == a.pm

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(0, math.pi), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
    def test_hermitian(self, theta, theta_dot, phi_dot):
        assert connection_analytic(theta, theta_dot, phi_dot).is_hermitian(1e-10)

    def test_diagonal_sum_is_phi_dot(self):
        a = connection_analytic(1.1, 0.3, -2.0)
        assert a.pp + a.mm == pytest.approx(-2.0)

    def test_non_hermitian_detected(self):
        assert not ConnectionMatrix(np.array([[1j, 0], [0, 0]])).is_hermitian()

    def test_connection_along_matches_pointwise(self):
        path = random_path(np.random.default_rng(3))
        t = np.linspace(0, path.period_T, 7)
        pt = polar_track(path, t)
        along = connection_along(path, t)
        for k in range(t.size):
            ref = connection_analytic(pt.theta[k], pt.theta_dot[k], pt.phi_dot[k]).entries
            assert np.allclose(along[k], ref, atol=1e-15)


class TestNumeric:
    def test_matches_analytic_on_circle(self):
        path = circle_path(math.pi / 3, T=2.0)
        num = connection_numeric(path, 0.7, 2e-5)
        pt = polar_track(path, [0.7])
        ana = connection_analytic(pt.theta[0], pt.theta_dot[0], pt.phi_dot[0])
        assert num.max_deviation(ana) < 1e-8

    def test_constant_path_gives_zero(self):
        path = constant_path((0.3, -0.4, 0.5))
        assert np.abs(connection_numeric(path, 0.5, 1e-5).entries).max() == 0.0

    def test_parallel_gauge_removes_diagonal(self):
        path = circle_path(math.pi / 3)
        par = connection_numeric(path, 0.3, 1e-5, gauge="parallel")
        pol = connection_numeric(path, 0.3, 1e-5)
        assert abs(par.pp) < 1e-8 and abs(par.mm) < 1e-8
        assert abs(abs(par.pm) - abs(pol.pm)) < 1e-8

    def test_unknown_gauge(self):
        with pytest.raises(ValueError):
            connection_numeric(circle_path(1.0), 0.3, 1e-5, gauge="coulomb")

    def test_pole_in_stencil(self):
        with pytest.raises(StencilError) as info:
            connection_numeric(constant_path((0, 0, 1)), 0.5, 1e-5)
        assert info.value.t == 0.5

    def test_crossing_in_stencil(self):
        # straight line through the origin at t = 0.5
        line = ParameterPath(1.0, lambda t: np.array([0 * t, t - 0.5, 0.2 * (t - 0.5), 0.1 * (t - 0.5)]),
                             closed=False)
        with pytest.raises(StencilError):
            connection_numeric(line, 0.5, 1e-3)


class TestLoopIntegral:
    @pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3])
    def test_circle_values(self, theta):
        loop = berry_loop_integral(circle_path(theta))
        expected = math.pi * (1 - math.cos(theta))
        assert loop.gamma_minus == pytest.approx(expected, abs=1e-12)
        assert loop.solid_angle == pytest.approx(2 * expected, abs=1e-10)
        assert loop.winding == 1

    def test_equator_solid_angle(self):
        loop = berry_loop_integral(circle_path(math.pi / 2))
        assert loop.gamma_minus == pytest.approx(math.pi, abs=1e-12)
        assert loop.solid_angle == pytest.approx(2 * math.pi, abs=1e-10)

    def test_small_cap_vanishes(self):
        loop = berry_loop_integral(circle_path(1e-4))
        assert loop.gamma_minus == pytest.approx(math.pi * (1 - math.cos(1e-4)), rel=1e-6)
        assert loop.solid_angle == pytest.approx(2 * loop.gamma_minus, rel=1e-6)

    def test_open_path_rejected(self):
        p = ParameterPath(1.0, lambda t: np.array([0 * t, 1 + t, 0 * t + 1, 0 * t]), closed=False)
        with pytest.raises(ContractError):
            berry_loop_integral(p)

    def test_pole_on_path(self):
        with pytest.raises(SingularityError) as info:
            berry_loop_integral(fourier_path(1.0, [0, 1, 0, 0], [[0], [1], [0], [0]], [[0], [0], [0], [1]]))
        assert info.value.t is not None

    def test_loop_not_enclosing_axis(self):
        path = build_field_path(FieldSweepModel(B0=1.0, omega=1.0, mu=1.0, b1=2.0))
        loop = berry_loop_integral(path)
        assert loop.winding == 0
        assert abs(loop.gamma_minus) < 1e-12
        assert abs(loop.solid_angle) < 1e-10

    def test_plus_minus_sum_counts_winding(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            loop = berry_loop_integral(random_path(rng))
            assert loop.gamma_plus + loop.gamma_minus == pytest.approx(2 * math.pi * loop.winding, abs=1e-9)

    def test_half_solid_angle_generic(self):
        rng = np.random.default_rng(22)
        paths = [TILTED_ELLIPSE] + [random_path(rng) for _ in range(10)]
        for path in paths:
            loop = berry_loop_integral(path, quadrature_n=10_000)
            assert loop.gamma_minus == pytest.approx(loop.solid_angle / 2, abs=1e-6)

    def test_reparametrization_invariance(self):
        rng = np.random.default_rng(23)
        for path in [TILTED_ELLIPSE, random_path(rng), random_path(rng)]:
            T = path.period_T
            re = path.reparametrized(lambda t: T * (t / T) ** 2, lambda t: 2 * t / T)
            a = berry_loop_integral(path, 8192).gamma_minus
            b = berry_loop_integral(re, 8192).gamma_minus
            assert abs(a - b) < 1e-8

    def test_solid_angle_southern_loop(self):
        # circle at theta = 5 pi / 6 winding once, measured through the south pole
        loop = berry_loop_integral(circle_path(5 * math.pi / 6))
        assert loop.solid_angle == pytest.approx(2 * math.pi * (1 - math.cos(5 * math.pi / 6)), abs=1e-10)

    def test_solid_angle_direct_triangle_octant(self):
        s = np.linspace(0, 1, 2001)
        arc = lambda a, b: np.array([np.cos(a + (b - a) * s), np.sin(a + (b - a) * s), 0 * s])
        # octant loop: x -> y along the equator, y -> z, z -> x along meridians
        leg1 = arc(0, math.pi / 2)
        leg2 = np.array([0 * s, np.cos(math.pi / 2 * s), np.sin(math.pi / 2 * s)])
        leg3 = np.array([np.sin(math.pi / 2 * s), 0 * s, np.cos(math.pi / 2 * s)])
        u = np.concatenate([leg1, leg2[:, 1:], leg3[:, 1:]], axis=1)
        assert solid_angle(u, winding=0) == pytest.approx(math.pi / 2, abs=1e-6)


class TestScaling:
    def test_equator_circle(self):
        before, after = scaling_check(circle_path(math.pi / 2), 1e-3)
        assert before == pytest.approx(math.pi, abs=1e-9)
        assert after == pytest.approx(math.pi, abs=1e-9)

    def test_identity_scaling_bitwise(self):
        before, after = scaling_check(TILTED_ELLIPSE, 1.0)
        assert before == after

    def test_tilted_ellipse_against_finer_quadrature(self):
        before, after = scaling_check(TILTED_ELLIPSE, 0.1)
        assert abs(before - after) < 1e-9
        oracle = berry_loop_integral(TILTED_ELLIPSE, 40960).gamma_minus
        assert abs(before - oracle) < 1e-9

    def test_scaled_into_threshold(self):
        with pytest.raises(DegeneracyError):
            scaling_check(circle_path(1.0, r=1e-3), 1e-12)

    def test_bad_epsilon(self):
        with pytest.raises(ContractError):
            scaling_check(circle_path(1.0), 0.0)
