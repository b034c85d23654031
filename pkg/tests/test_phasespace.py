from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tomoscope.errors import InvariantError, ResolutionError
from tomoscope.numgrid import Grid1D
from tomoscope.phasespace import WignerFunction, density_from_wigner, parity_deviation, wigner_from_density
from tomoscope.states import catalogue, density_from_pure, fock, mix

G = Grid1D(-8.0, 8.0, 512)
G0 = Grid1D(-8.0, 8.0, 513)  # has q = p = 0


@pytest.fixture(scope="module")
def cat():
    return catalogue(G)


def test_vacuum_closed_form():
    W = wigner_from_density(density_from_pure(fock(0, G0)))
    q, p = W.qgrid.points[:, None], W.pgrid.points[None, :]
    assert np.max(np.abs(W.w - 2 * np.exp(-q * q - p * p))) < 1e-10
    assert W.w[256, 256] == pytest.approx(2.0, abs=1e-10)


def test_fock1_origin():
    W = wigner_from_density(density_from_pure(fock(1, G0)))
    assert W.w[256, 256] == pytest.approx(-2.0, abs=1e-10)
    q, p = W.qgrid.points[:, None], W.pgrid.points[None, :]
    r2 = q * q + p * p
    assert np.max(np.abs(W.w - 2 * (2 * r2 - 1) * np.exp(-r2))) < 1e-10


def test_normalization_and_bound(cat):
    for e in cat:
        W = wigner_from_density(e.rho)
        W.check_invariants(pure=e.pure is not None)
        assert np.isrealobj(W.w)


def test_round_trip(cat):
    for e in cat:
        back = density_from_wigner(wigner_from_density(e.rho))
        err = np.linalg.norm(back.rho - e.rho.rho) / np.linalg.norm(e.rho.rho)
        assert err < 1e-6, e.name


def test_vacuum_density_value():
    rho = density_from_wigner(wigner_from_density(density_from_pure(fock(0, G0))))
    assert rho.rho[256, 256].real == pytest.approx(np.pi**-0.5, abs=1e-7)


def test_mixture_trace():
    rho = mix([(0.5, fock(0, G)), (0.5, fock(1, G))])
    back = density_from_wigner(wigner_from_density(rho))
    assert back.trace() == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("n", [0, 2])
def test_parity(n):
    W = wigner_from_density(density_from_pure(fock(n, G)))
    assert parity_deviation(W) < 1e-8


def test_half_lattice_and_interpolated_qgrids():
    rho = density_from_pure(fock(1, G))
    half = wigner_from_density(rho, qgrid=G.half_lattice())
    assert np.allclose(half.w[::2], wigner_from_density(rho).w, atol=1e-14)
    other = Grid1D(-6.0, 6.0, 300)
    Wi = wigner_from_density(rho, qgrid=other)
    q, p = other.points[:, None], G.points[None, :]
    r2 = q * q + p * p
    assert np.max(np.abs(Wi.w - 2 * (2 * r2 - 1) * np.exp(-r2))) < 1e-6


def test_p_grid_beyond_band():
    with pytest.raises(ResolutionError):
        wigner_from_density(density_from_pure(fock(0, G)), pgrid=Grid1D(-80.0, 80.0, 512))


def test_unnormalized_rejected():
    W = wigner_from_density(density_from_pure(fock(0, G)))
    with pytest.raises(InvariantError):
        density_from_wigner(WignerFunction(W.qgrid, W.pgrid, 1.5 * W.w))


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 1.0))
def test_linearity(t):
    a, b = density_from_pure(fock(0, G)), density_from_pure(fock(3, G))
    m = mix([(t, a), (1 - t, b)])
    lhs = wigner_from_density(m).w
    rhs = t * wigner_from_density(a).w + (1 - t) * wigner_from_density(b).w
    assert np.max(np.abs(lhs - rhs)) < 1e-10
    back = density_from_wigner(WignerFunction(G, G, lhs)).rho
    assert np.max(np.abs(back - m.rho)) < 1e-10
