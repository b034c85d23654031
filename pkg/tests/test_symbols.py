from __future__ import annotations

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import coherent_tomogram
from tomoscope.errors import RepresentationError
from tomoscope.numgrid import AngleGrid, Grid1D, integrate
from tomoscope.radon import MultimodeTomogram, OpticalTomogram, tomogram_from_density
from tomoscope.states import ModeParams, coherent, density_from_pure, fock
from tomoscope.symbols import (
    REGULAR_NAMES,
    OperatorMatrix,
    canonical,
    derive_dual,
    dual_of_product,
    dual_regular,
    dual_singular,
    expect,
    matrix_expectation,
    operator_matrix,
    regularization_table,
    rule_residual,
    same_symbol,
    slice_at,
    symbol_of,
)
from tomoscope.tomops import (
    JX,
    expectation as tomops_expectation,
    identity,
    op_a,
    op_adag,
    op_l,
    op_N,
    op_p,
    op_q,
    op_qp,
    operator,
    x_symbol,
)

G = Grid1D(-8.0, 8.0, 512)
XS = G.points


class TestSymbolOf:
    ag = AngleGrid(12)

    def test_density_matrix_gives_tomogram(self):
        rho = density_from_pure(coherent(0.6 - 0.8j, G))
        sym = symbol_of(OperatorMatrix.from_matrix(G, rho.matrix), self.ag)
        w = tomogram_from_density(rho, self.ag)
        assert np.max(np.abs(sym - w.w)) < 1e-8

    def test_identity_is_flat(self):
        sym = symbol_of(operator_matrix("one", G), self.ag)
        assert np.max(np.abs(sym * G.dx - 1)) < 1e-10

    def test_position_at_theta_zero(self):
        sym = symbol_of(operator_matrix("q", G), self.ag)
        assert np.max(np.abs(sym[0] * G.dx - XS)) < 1e-5


class TestMatrixOracle:
    def test_moments(self):
        rho = density_from_pure(coherent(1.0 + 0.5j, G))
        assert matrix_expectation(operator_matrix("q", G), rho) == pytest.approx(np.sqrt(2), abs=1e-8)
        assert matrix_expectation(operator_matrix("p", G), rho) == pytest.approx(np.sqrt(2) * 0.5, abs=1e-8)
        assert matrix_expectation(operator_matrix("N", G), rho) == pytest.approx(1.25, abs=1e-8)
        assert matrix_expectation(operator_matrix("qp", G), rho) == pytest.approx(1.0 + 0.5j, abs=1e-8)

    def test_canonical_commutator(self):
        a, ad = operator_matrix("a", G), operator_matrix("adag", G)
        rho = density_from_pure(fock(2, G))
        assert matrix_expectation(a @ ad - ad @ a, rho) == pytest.approx(1.0, abs=1e-8)


class TestRegularDual:
    def test_one(self, tomograms):
        for w in tomograms.values():
            assert expect(dual_regular("one"), w) == pytest.approx(1.0, abs=1e-6)

    def test_q_coherent(self, grid, agrid):
        w = coherent_tomogram(1 / np.sqrt(2), grid, agrid)
        assert expect(dual_regular("q"), w) == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("n", range(4))
    def test_N(self, fock_tomo, n):
        assert expect(dual_regular("N"), fock_tomo[n]) == pytest.approx(n, abs=1e-4)

    def test_q2_vacuum(self, fock_tomo):
        assert expect(dual_regular("q2"), fock_tomo[0]) == pytest.approx(0.5, abs=1e-5)

    def test_qp_vacuum(self, fock_tomo):
        assert expect(dual_regular("qp"), fock_tomo[0]) == pytest.approx(0.5j, abs=1e-4)

    def test_p2_fock1(self, fock_tomo):
        assert expect(dual_regular("p2"), fock_tomo[1]) == pytest.approx(1.5, abs=1e-4)

    def test_hermitian_real(self, tomograms):
        for w in tomograms.values():
            for k in ("q", "p", "q2", "p2", "N"):
                assert abs(expect(dual_regular(k), w).imag) < 1e-8

    def test_symmetrized_qp(self, states, tomograms):
        sym = dual_regular("qp")
        for e in states:
            w = tomograms[e.name]
            val = 0.5 * (expect(sym, w) + expect(sym.conjugate(), w))
            ref = matrix_expectation(operator_matrix("qp_sym", G), e.rho)
            assert abs(val - ref) < 1e-3

    def test_three_routes(self, states, tomograms):
        for e in states:
            w = tomograms[e.name]
            for k in ("q", "p", "q2", "p2", "N"):
                reg = expect(dual_regular(k), w)
                assert abs(reg - matrix_expectation(operator_matrix(k, G), e.rho)) < 1e-3
                assert abs(reg - tomops_expectation(operator(k), w)) < 1e-3
                if k in ("q", "p"):
                    assert abs(reg - expect(dual_singular(k), w)) < 1e-5

    def test_scaled_params(self, agrid):
        params = ModeParams(mass=2.0, omega0=3.0)
        rho = density_from_pure(coherent(0.6 - 0.8j, G, params))
        w = tomogram_from_density(rho, agrid, G, params)
        for k in ("q", "p", "q2", "p2", "qp"):
            ref = matrix_expectation(operator_matrix(k, G, params), rho)
            assert abs(expect(dual_regular(k, params=params), w) - ref) < 1e-3 * max(1, abs(ref)), k

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            dual_regular("r")

    def test_mode_count_mismatch(self, fock_tomo):
        with pytest.raises(RepresentationError):
            expect(dual_regular("l1"), fock_tomo[0])
        with pytest.raises(RepresentationError):
            expect(dual_regular("l1"), MultimodeTomogram((fock_tomo[0], fock_tomo[1])))


class TestSingularDual:
    def test_one(self, tomograms):
        for w in tomograms.values():
            assert expect(dual_singular("one"), w) == pytest.approx(1.0, abs=1e-6)

    def test_one_reference_angle(self, tomograms):
        w = tomograms["coherent:0.6-0.8j"]
        vals = [expect(dual_singular("one", theta0=t), w) for t in (0.0, 0.3, 1.0, 2.9, 3.1)]
        assert np.ptp(np.real(vals)) < 1e-6

    def test_q_coherent(self, grid, agrid):
        w = coherent_tomogram(1.0, grid, agrid)
        s = expect(dual_singular("q"), w)
        assert s == pytest.approx(np.sqrt(2), abs=1e-5)
        assert abs(s - expect(dual_regular("q"), w)) < 1e-6

    @pytest.mark.parametrize("n", range(4))
    def test_p_fock(self, fock_tomo, n):
        assert abs(expect(dual_singular("p"), fock_tomo[n])) < 1e-8

    def test_qp(self, grid, agrid):
        a = 0.6 - 0.8j
        w = coherent_tomogram(a, grid, agrid)
        ref = 2 * a.real * a.imag + 0.5j
        assert expect(dual_singular("qp"), w) == pytest.approx(ref, abs=1e-5)

    def test_slice_at_symmetry(self, tomograms):
        w = tomograms["coherent:1+0j"]
        assert np.max(np.abs(slice_at(w, np.pi) - w.w[0][::-1])) < 1e-12
        assert np.max(np.abs(slice_at(w, 2 * np.pi) - w.w[0])) < 1e-12

    def test_unknown(self):
        with pytest.raises(KeyError):
            dual_singular("N")


class TestMultimode:
    def test_l1_product(self, grid, agrid, fock_tomo):
        w = MultimodeTomogram((fock_tomo[0], coherent_tomogram(1.0, grid, agrid), coherent_tomogram(1j, grid, agrid)))
        assert expect(dual_regular("l1"), w) == pytest.approx(2.0, abs=1e-3)

    def test_joint_matches_product(self):
        ag = AngleGrid(16)
        xg = Grid1D(-8.0, 8.0, 128)
        a = tomogram_from_density(density_from_pure(coherent(0.7, xg)), ag)
        b = tomogram_from_density(density_from_pure(coherent(0.4j, xg)), ag)
        sym = dual_regular("l3")
        prod = expect(sym, MultimodeTomogram((a, b)))
        joint = expect(sym, MultimodeTomogram.product(a, b, with_joint=True))
        assert joint == pytest.approx(prod, abs=1e-10)
        assert prod == pytest.approx(2 * 0.7 * 0.4, abs=1e-3)


class TestDualOfProduct:
    @pytest.mark.parametrize("n", range(4))
    def test_number(self, fock_tomo, n):
        assert dual_of_product(dual_regular("adag"), op_a(), fock_tomo[n]) == pytest.approx(n, abs=1e-3)

    def test_identity(self, tomograms):
        w = tomograms["coherent:0.6-0.8j"]
        sym = dual_regular("q")
        assert abs(dual_of_product(sym, identity(), w) - expect(sym, w)) < 1e-10

    def test_qp_vacuum(self, fock_tomo):
        assert dual_of_product(dual_regular("q"), op_p(), fock_tomo[0]) == pytest.approx(0.5j, abs=1e-3)


class TestRegularization:
    def test_derived_duals_match_closed_forms(self):
        for name in ("q", "p", "q2", "p2", "qp", "a", "adag", "N"):
            assert same_symbol(derive_dual(operator(name)), dual_regular(name)), name
        assert same_symbol(derive_dual(op_l(1)), dual_regular("l1"))

    def test_q_and_N_literal(self):
        X0, th = x_symbol(0), sp.Symbol("theta0", real=True)
        assert sp.simplify(derive_dual(op_q()).expr - 2 * X0 * sp.cos(th) / sp.pi) == 0
        assert sp.simplify(canonical(derive_dual(op_N())) - (X0**2 - sp.Rational(1, 2)) / sp.pi) == 0

    def test_double_integration_by_parts(self, tomograms):
        from tomoscope.numgrid import integrate_fp, inverse_dx

        for w in tomograms.values():
            lhs = integrate_fp(inverse_dx(w.w, G, power=2, axis=1), G, axis=1)
            rhs = integrate(0.5 * XS[None, :] ** 2 * w.w, G, axis=1)
            assert np.max(np.abs(lhs - rhs)) < 1e-5

    def test_table_on_catalogue(self, tomograms):
        table = regularization_table()
        assert len(table) >= 6
        assert any(r.label == "J^2" for r in table)
        for w in tomograms.values():
            for rule in table:
                assert rule_residual(rule, w) < 1e-4, rule.label

    def test_parity_guard(self):
        from tomoscope.symbols import regularize_term

        with pytest.raises(ValueError):
            # sin(theta) d/dtheta against an even weight is not removable
            regularize_term(((0, 0, 0, 1),), sp.sin(sp.Symbol("theta0", real=True)))

    def test_j_rule_symbolic(self):
        assert derive_dual(JX()).expr == -x_symbol(0) / sp.pi


def test_regular_names_cover_catalogue():
    for name in REGULAR_NAMES:
        assert dual_regular(name).label


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_pairing_linear(a, b):
    ag = AngleGrid(8)
    u = tomogram_from_density(density_from_pure(fock(1, G)), ag)
    v = tomogram_from_density(density_from_pure(coherent(0.5, G)), ag)
    mix = OpticalTomogram(ag, G, a * u.w + b * v.w)
    for name in ("q2", "qp", "N"):
        sym = dual_regular(name)
        assert abs(expect(sym, mix) - a * expect(sym, u) - b * expect(sym, v)) < 1e-10
