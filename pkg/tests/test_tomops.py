from __future__ import annotations

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import coherent_tomogram
from tomoscope.errors import RepresentationError, ZeroModeError
from tomoscope.numgrid import AngleGrid, Grid1D, deriv_x, integrate
from tomoscope.phasespace import WignerFunction, wigner_from_density
from tomoscope.radon import MultimodeTomogram, OpticalTomogram, tomogram_from_density, tomogram_from_wigner
from tomoscope.states import ModeParams, coherent, density_from_pure, fock, hermite_functions
from tomoscope.symbols import matrix_expectation, operator_matrix
from tomoscope.tomops import (
    DT,
    DX,
    JX,
    C,
    X,
    compose,
    expectation,
    identity,
    op_a,
    op_adag,
    op_l,
    op_N,
    op_p,
    op_p2,
    op_q,
    op_q2,
    op_qp,
    operator,
    rule_dp,
    rule_dq,
    rule_pmul,
    rule_qmul,
    slice_expectations,
    theta_spread,
)

G = Grid1D(-8.0, 8.0, 512)
XS = G.points


class TestCorrespondenceRules:
    def test_dq_vacuum(self, fock_tomo):
        w = fock_tomo[0]
        ref = -2 * XS[None, :] * np.cos(w.angles)[:, None] * np.exp(-XS**2)[None, :] / np.sqrt(np.pi)
        assert np.max(np.abs(rule_dq(w) - ref)) < 1e-6

    def test_constant_input(self):
        ag = AngleGrid(16)
        w = OpticalTomogram(ag, G, np.ones((16, G.n)))
        assert np.max(np.abs(rule_dq(w))) < 1e-12
        assert np.max(np.abs(rule_dp(w))) < 1e-12

    def test_qmul_vacuum_parity(self, fock_tomo):
        v = integrate(rule_qmul(fock_tomo[0]), G, axis=1)
        assert np.max(np.abs(v)) < 1e-8

    def test_qmul_coherent_mean(self, grid, agrid):
        w = coherent_tomogram(1.0, grid, agrid)
        val = expectation(C(sp.sin) @ JX() @ DT() + X() @ C(sp.cos), w)
        assert val.real == pytest.approx(np.sqrt(2), abs=1e-5)
        assert np.mean(integrate(rule_qmul(w), G, axis=1)) == pytest.approx(np.sqrt(2), abs=1e-5)

    def test_route_equivalence(self, states, agrid):
        e = states[6]
        w = tomogram_from_density(e.rho, agrid)
        W = wigner_from_density(e.rho)
        q, p = W.qgrid.points[:, None], W.pgrid.points[None, :]
        cases = [
            (rule_dq, deriv_x(W.w, W.qgrid, axis=0)),
            (rule_dp, deriv_x(W.w, W.pgrid, axis=1)),
            (rule_qmul, q * W.w),
            (rule_pmul, p * W.w),
        ]
        for rule, arr in cases:
            lhs = tomogram_from_wigner(WignerFunction(W.qgrid, W.pgrid, arr), agrid).w
            assert np.max(np.abs(lhs - rule(w))) < 1e-4

    def test_zero_mode_rejected(self):
        ag = AngleGrid(16)
        g = np.exp(-XS**2) / np.sqrt(np.pi)
        # slice norms that vary with theta break the zero-mean precondition of d/dtheta w
        w = OpticalTomogram(ag, G, (1 + 0.5 * np.cos(2 * ag.angles))[:, None] * g[None, :])
        with pytest.raises(ZeroModeError):
            rule_qmul(w)


class TestOperatorTable:
    def test_q_vacuum(self, fock_tomo):
        assert abs(expectation(op_q(), fock_tomo[0])) < 1e-8

    def test_q2_vacuum(self, fock_tomo):
        v = expectation(op_q2(), fock_tomo[0])
        assert v.real == pytest.approx(0.5, abs=1e-4)
        assert abs(v.imag) < 1e-8

    def test_p2_fock1(self, fock_tomo):
        assert expectation(op_p2(), fock_tomo[1]).real == pytest.approx(1.5, abs=1e-4)

    def test_qp_vacuum(self, fock_tomo):
        assert expectation(op_qp(), fock_tomo[0]) == pytest.approx(0.5j, abs=1e-4)

    def test_scaled_params_against_matrix(self, agrid):
        params = ModeParams(mass=2.0, omega0=3.0)
        rho = density_from_pure(coherent(0.6 - 0.8j, G, params))
        w = tomogram_from_density(rho, agrid, G, params)
        for name in ("q", "p", "q2", "p2", "qp"):
            ref = matrix_expectation(operator_matrix(name, G, params), rho)
            got = expectation(operator(name, params=params), w)
            assert abs(got - ref) < 1e-3 * max(1.0, abs(ref)), name

    def test_products_are_exact(self):
        for params in (ModeParams(), ModeParams(hbar=0.7, mass=1.3, omega0=0.4)):
            q, p = op_q(params=params), op_p(params=params)
            assert (q @ q).equals(op_q2(params=params))
            assert (p @ p).equals(op_p2(params=params))
            assert (q @ p).equals(op_qp(params=params))


class TestLadder:
    def test_a_coherent(self, grid, agrid):
        assert expectation(op_a(), coherent_tomogram(1.0, grid, agrid)) == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("n", range(4))
    def test_a_fock(self, fock_tomo, n):
        assert abs(expectation(op_a(), fock_tomo[n])) < 1e-6

    def test_adag_a_is_N(self, tomograms):
        prod = op_adag() @ op_a()
        assert prod.equals(op_N())
        for name in ("fock:2", "coherent:0.6-0.8j", "thermal:0.3"):
            w = tomograms[name]
            assert np.max(np.abs(prod.apply(w) - op_N().apply(w))) < 1e-6

    def test_commutator_on_vacuum(self, fock_tomo):
        comm = compose([op_a(), op_adag()]) - compose([op_adag(), op_a()])
        assert comm.equals(identity())
        w = fock_tomo[0]
        assert np.max(np.abs(comm.apply(w) - w.w)) < 1e-3


class TestNumber:
    @pytest.mark.parametrize("n", range(4))
    def test_eigenvalue(self, fock_tomo, n):
        w = fock_tomo[n]
        assert np.linalg.norm(op_N().apply(w) - n * w.w) / np.linalg.norm(w.w) <= 1e-3

    def test_vacuum_annihilated(self, fock_tomo):
        w = fock_tomo[0]
        assert np.max(np.abs(op_N().apply(w))) < 1e-3 * np.max(w.w)

    @pytest.mark.parametrize("alpha", [1.0, 0.6 - 0.8j, 1.5j])
    def test_coherent(self, grid, agrid, alpha):
        w = coherent_tomogram(alpha, grid, agrid)
        assert expectation(op_N(), w).real == pytest.approx(abs(alpha) ** 2, abs=1e-3)


@pytest.fixture(scope="module")
def three(grid, agrid):
    return lambda a2, a3: MultimodeTomogram((
        coherent_tomogram(0, grid, agrid),
        coherent_tomogram(a2, grid, agrid),
        coherent_tomogram(a3, grid, agrid),
    ))


class TestAngularMomentum:

    def test_vacuum(self, three):
        assert abs(expectation(op_l(1), three(0, 0))) < 1e-6

    def test_one_and_i(self, three):
        assert expectation(op_l(1), three(1.0, 1j)) == pytest.approx(2.0, abs=1e-3)

    def test_factorization(self, three):
        a2, a3 = 0.6 - 0.8j, -0.5 + 1.1j
        ref = 2 * (a2.real * a3.imag - a2.imag * a3.real)
        assert expectation(op_l(1), three(a2, a3)) == pytest.approx(ref, abs=1e-3)

    def test_cyclic_axes(self, three):
        w = three(1.0, 1j)
        # l2 = q2 p0 - p2 q0 and l3 = q0 p1 - p0 q1 vanish with mode 0 in vacuum
        assert abs(expectation(op_l(2), w)) < 1e-6
        assert abs(expectation(op_l(3), w)) < 1e-6

    def test_symbolic_form(self):
        q1p2 = op_q(1) @ op_p(2)
        p1q2 = op_p(1) @ op_q(2)
        assert op_l(1).equals(q1p2 - p1q2)

    def test_joint_entangled(self):
        # (|01> + i|10>)/sqrt(2): <l3> = <q0 p1 - p0 q1> = -1
        ag, xg = AngleGrid(16), Grid1D(-8.0, 8.0, 128)
        h = hermite_functions(1, xg.points)
        th = ag.angles
        amp = (h[0][None, None, :, None] * h[1][None, None, None, :] * np.exp(-1j * th)[None, :, None, None]
               + 1j * h[1][None, None, :, None] * h[0][None, None, None, :] * np.exp(-1j * th)[:, None, None, None])
        joint = 0.5 * np.abs(amp) ** 2
        marg = OpticalTomogram(ag, xg, np.zeros((16, 128)))
        w = MultimodeTomogram((marg, marg), joint)
        assert expectation(op_l(3), w) == pytest.approx(-1.0, abs=1e-3)
        with pytest.raises(RepresentationError):
            op_l(1).apply(w)

    def test_single_mode_input_rejected(self, fock_tomo):
        with pytest.raises(RepresentationError):
            op_l(1).apply(fock_tomo[0])


class TestCompose:
    def test_empty_is_identity(self, fock_tomo):
        w = fock_tomo[1]
        assert np.array_equal(compose([]).apply(w), w.w.astype(complex))

    def test_q_q(self, tomograms):
        qq = compose([op_q(), op_q()])
        assert qq.equals(op_q2())
        for w in tomograms.values():
            assert np.max(np.abs(qq.apply(w) - op_q2().apply(w))) < 1e-4

    def test_linear_combination(self, fock_tomo):
        op = compose([[op_adag(), op_a()], []], coeffs=[2, -1])
        assert op.equals(2 * op_N() - identity())


class TestExpectations:
    def test_catalogue_routes(self, states, tomograms):
        for e in states:
            w = tomograms[e.name]
            for k in ("q", "p", "q2", "p2", "N"):
                assert abs(expectation(operator(k), w) - e.moments[k]) < 1e-3, (e.name, k)
                assert theta_spread(operator(k), w) < 1e-4, (e.name, k)

    def test_slices_constant(self, tomograms):
        v = slice_expectations(op_N(), tomograms["coherent:0.6-0.8j"])
        assert np.ptp(v.real) < 1e-4


def _random_tomogram(rng, ag):
    env = np.exp(-XS**2 / 2)
    u = rng.normal(size=(ag.n_theta, G.n)) ** 2 * env
    u /= integrate(u, G, axis=1)[:, None]
    return u


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2**31 - 1))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    ag = AngleGrid(12)
    u, v = _random_tomogram(rng, ag), _random_tomogram(rng, ag)
    for op in (op_N(), op_qp(), op_adag()):
        f = lambda arr: op.apply(OpticalTomogram(ag, G, arr), zero_mode_tol=1e-4)  # noqa: E731
        lhs = f(a * u + b * v)
        rhs = a * f(u) + b * f(v)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=3, max_size=3))
def test_associativity(idx):
    pool = [op_q(), op_p(), op_a(), X(), DX(), C(sp.cos) @ JX() @ DT()]
    a, b, c = (pool[i] for i in idx)
    assert ((a @ b) @ c).equals(a @ (b @ c))
