from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from tomoscope.errors import DimensionError, ZeroModeError
from tomoscope.numgrid import (
    AngleGrid,
    FilterSpec,
    Grid1D,
    antideriv_x,
    deriv_theta,
    deriv_x,
    integrate,
    integrate_fp,
    inverse_dx,
    reflect_x,
    theta_integrate,
)

G = Grid1D(-8.0, 8.0, 512)
X = G.points


def test_grid_points_uniform():
    d = np.diff(X)
    assert np.allclose(d, G.dx, rtol=0, atol=1e-14)
    assert X[0] == -8.0 and X[-1] == 8.0


@pytest.mark.parametrize("args", [(0.0, 1.0, 8), (1.0, 0.0, 64), (0.0, 0.0, 64)])
def test_grid_rejects_bad_shapes(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_angle_grid_half_open():
    ag = AngleGrid(180)
    assert ag.angles[0] == 0.0
    assert ag.angles[-1] < np.pi
    assert np.isclose(ag.angles[-1] + ag.dtheta, np.pi)


def test_filter_spec_validation():
    assert FilterSpec().k_cutoff_fraction == 1.0
    with pytest.raises(ValueError):
        FilterSpec(k_cutoff_fraction=0.0)
    with pytest.raises(ValueError):
        FilterSpec(kind="hann")


class TestIntegrate:
    def test_zero(self):
        assert integrate(np.zeros(G.n), G) == 0.0

    def test_gaussian(self):
        # erf closed form over the finite box
        exact = np.sqrt(np.pi) * erf(8.0)
        assert abs(integrate(np.exp(-X**2), G) - exact) < 1e-10

    def test_odd(self):
        assert abs(integrate(X, G)) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            integrate(np.ones(G.n - 1), G)


class TestDerivX:
    inner = np.abs(X) < 0.8 * 8

    def test_first(self):
        f = np.exp(-X**2)
        assert np.max(np.abs(deriv_x(f, G) + 2 * X * f)[self.inner]) < 1e-8

    def test_constant(self):
        assert np.max(np.abs(deriv_x(np.full(G.n, 3.0), G))) < 1e-12

    def test_second(self):
        f = np.exp(-X**2)
        assert np.max(np.abs(deriv_x(f, G, order=2) - (4 * X**2 - 2) * f)[self.inner]) < 1e-6

    def test_real_in_real_out(self):
        assert np.isrealobj(deriv_x(np.exp(-X**2), G))


class TestAntiderivX:
    def test_plane_wave(self):
        # a wave periodic on the FFT box
        L = G.n * G.dx
        k = 2 * np.pi * 7 / L
        out = antideriv_x(np.cos(k * X), G)
        assert np.max(np.abs(out - np.sin(k * X) / k)) < 1e-8

    def test_zero(self):
        assert np.all(antideriv_x(np.zeros(G.n), G) == 0)

    def test_exact_derivative(self):
        f = np.exp(-X**2)
        out = antideriv_x(-2 * X * f, G)
        mean = integrate(f, G) / (G.n * G.dx)
        # periodic mean over the FFT box
        assert np.max(np.abs(out - (f - np.mean(f)))) < 1e-7
        assert abs(np.mean(f) - mean) < 1e-3

    def test_reject_nonzero_mean(self):
        with pytest.raises(ZeroModeError) as info:
            antideriv_x(np.exp(-X**2), G, policy="reject-above-tol", tol=1e-6)
        assert info.value.mean == pytest.approx(np.sqrt(np.pi), rel=1e-8)

    def test_reject_passes_zero_mean(self):
        antideriv_x(-2 * X * np.exp(-X**2), G, policy="reject-above-tol")

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
    def test_inverse_of_derivative(self, c):
        # band-limited random input
        L = G.n * G.dx
        f = sum(a * np.cos(2 * np.pi * (j + 1) * X / L + j) for j, a in enumerate(c))
        back = deriv_x(antideriv_x(f, G), G)
        assert np.max(np.abs(back - (f - f.mean()))) < 1e-8


class TestInverseDx:
    f = np.exp(-X**2) / np.sqrt(np.pi)

    def test_whole_line_step(self):
        J = inverse_dx(self.f, G)
        assert J[0] == pytest.approx(-0.5, abs=1e-12)
        assert J[-1] == pytest.approx(0.5, abs=1e-12)
        assert np.max(np.abs(J - 0.5 * erf(X))) < 1e-10

    def test_square_is_half_abs_convolution(self):
        J2 = inverse_dx(self.f, G, power=2)
        exact = 0.5 * (X * erf(X) + np.exp(-X**2) / np.sqrt(np.pi))
        assert np.max(np.abs(J2 - exact)) < 1e-10

    def test_inverse_of_derivative(self):
        assert np.max(np.abs(inverse_dx(deriv_x(self.f, G), G) - self.f)) < 1e-10

    def test_finite_part(self):
        # fp int J^2 f = (1/2) int X^2 f, fp int X J f = -(1/2) int X^2 f
        m2 = 0.5 * integrate(X**2 * self.f, G)
        assert integrate_fp(inverse_dx(self.f, G, power=2), G) == pytest.approx(m2, abs=1e-9)
        assert integrate_fp(X * inverse_dx(self.f, G), G) == pytest.approx(-m2, abs=1e-9)

    def test_finite_part_of_decaying_is_plain(self):
        assert integrate_fp(self.f, G) == pytest.approx(integrate(self.f, G), abs=1e-14)


class TestDerivTheta:
    ag = AngleGrid(180)
    g = np.exp(-X**2)

    def w(self, fn):
        # even g makes g(X) fn(theta) consistent with w(X, theta+pi) = w(-X, theta)
        return fn(self.ag.angles)[:, None] * self.g[None, :]

    def test_constant(self):
        assert np.max(np.abs(deriv_theta(self.w(np.ones_like), self.ag, G))) < 1e-12

    @pytest.mark.parametrize("method", ["fd4", "spectral"])
    def test_cos2(self, method):
        d = deriv_theta(self.w(lambda t: np.cos(2 * t)), self.ag, G, method=method)
        assert np.max(np.abs(d - self.w(lambda t: -2 * np.sin(2 * t)))) < 1e-5

    @pytest.mark.parametrize("method", ["fd4", "spectral"])
    def test_cos2_second(self, method):
        d = deriv_theta(self.w(lambda t: np.cos(2 * t)), self.ag, G, order=2, method=method)
        assert np.max(np.abs(d - self.w(lambda t: -4 * np.cos(2 * t)))) < 1e-4

    def test_odd_harmonic_uses_reflection(self):
        # X cos(theta) is consistent with the symmetry extension
        w = np.cos(self.ag.angles)[:, None] * (X * self.g)[None, :]
        d = deriv_theta(w, self.ag, G)
        ref = -np.sin(self.ag.angles)[:, None] * (X * self.g)[None, :]
        assert np.max(np.abs(d - ref)) < 1e-5

    def test_commutes_with_x_multiplication(self):
        rng = np.random.default_rng(1)
        w = rng.normal(size=(self.ag.n_theta, G.n)) * self.g
        h = np.cos(X)
        a = deriv_theta(w * h, self.ag, G)
        b = deriv_theta(w, self.ag, G) * h
        assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a))


def test_theta_integrate_rectangle_exact():
    ag = AngleGrid(12)
    assert theta_integrate(np.cos(2 * ag.angles) ** 2, ag) == pytest.approx(np.pi / 2, abs=1e-14)


def test_reflect_symmetric_grid():
    assert np.allclose(reflect_x(X, G), -X, rtol=0, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    env = np.exp(-X**2 / 4)
    u, v = rng.normal(size=G.n) * env, rng.normal(size=G.n) * env
    for op in (lambda f: deriv_x(f, G), lambda f: antideriv_x(f, G), lambda f: inverse_dx(f, G, 2)):
        lhs = op(a * u + b * v)
        rhs = a * op(u) + b * op(v)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs))) * 10
    assert abs(integrate(a * u + b * v, G) - a * integrate(u, G) - b * integrate(v, G)) < 1e-12
