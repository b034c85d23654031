"""Invariant suites run by ``tomoscope verify``.

Each suite returns a list of :class:`Check` records comparing a computed
quantity with an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import numgrid as ng
from .phasespace import WignerFunction, density_from_wigner, parity_deviation, wigner_from_density
from .radon import (
    MultimodeTomogram,
    density_from_tomogram,
    tomogram_from_density,
    tomogram_from_wigner,
)
from .states import catalogue, coherent, density_from_pure, fock
from .symbols import (
    dual_regular,
    dual_singular,
    expect,
    matrix_expectation,
    operator_matrix,
    regularization_table,
    rule_residual,
)
from .tomops import (
    compose,
    expectation,
    identity,
    op_a,
    op_adag,
    op_l,
    op_N,
    operator,
    rule_dp,
    rule_dq,
    rule_pmul,
    rule_qmul,
    theta_spread,
)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite:<10} {self.name:<48} {self.value:.3e} <= {self.tol:.0e}"


@dataclass
class Context:
    """Shared grids and lazily computed catalogue tomograms."""

    grid: ng.Grid1D = ng.DEFAULT_GRID
    agrid: ng.AngleGrid = ng.DEFAULT_ANGLES
    filt: ng.FilterSpec = field(default_factory=ng.FilterSpec)
    tol_scale: float = 1.0

    @cached_property
    def states(self):
        return catalogue(self.grid)

    @cached_property
    def tomograms(self) -> dict:
        return {e.name: tomogram_from_density(e.rho, self.agrid) for e in self.states}

    def tol(self, t: float) -> float:
        return t * self.tol_scale


def _numgrid(ctx: Context) -> list:
    g = ctx.grid
    x = g.points
    f = np.exp(-x * x)
    out = [
        Check("numgrid", "spectral d/dX of a Gaussian", float(np.max(np.abs(ng.deriv_x(f, g) + 2 * x * f))), 1e-8),
        Check("numgrid", "integral of a Gaussian", abs(ng.integrate(f, g) - np.sqrt(np.pi)), 1e-10),
    ]
    df = -2 * x * f
    out.append(Check("numgrid", "[d/dX]^-1 d/dX f = f", float(np.max(np.abs(ng.inverse_dx(df, g) - f))), 1e-8))
    # int J^2 f = (1/2) int X^2 f for the finite part
    fp = ng.integrate_fp(ng.inverse_dx(f, g, power=2), g)
    out.append(Check("numgrid", "finite part of [d/dX]^-2 f", abs(fp - np.sqrt(np.pi) / 4), 1e-8))
    return out


def _states(ctx: Context) -> list:
    out = []
    for e in ctx.states:
        r = e.rho
        out.append(Check("states", f"{e.name} trace", abs(r.trace() - 1), 1e-8))
        out.append(Check("states", f"{e.name} min eigenvalue", max(0.0, -float(r.eigenvalues()[-1])), 1e-8))
        if e.pure is not None:
            out.append(Check("states", f"{e.name} purity", abs(r.purity() - 1), 1e-8))
    return out


def _phasespace(ctx: Context) -> list:
    out = []
    for e in ctx.states:
        W = wigner_from_density(e.rho)
        out.append(Check("phasespace", f"{e.name} norm 2pi", abs(W.norm() - 2 * np.pi) / (2 * np.pi), 1e-6))
        back = density_from_wigner(W)
        err = np.linalg.norm(back.rho - e.rho.rho) / np.linalg.norm(e.rho.rho)
        out.append(Check("phasespace", f"{e.name} rho -> W -> rho", float(err), 1e-6))
    W0 = wigner_from_density(ctx.states[0].rho)
    q, p = W0.qgrid.points[:, None], W0.pgrid.points[None, :]
    out.append(Check("phasespace", "vacuum W = 2 exp(-q^2-p^2)", float(np.max(np.abs(W0.w - 2 * np.exp(-q * q - p * p)))), 1e-10))
    out.append(Check("phasespace", "vacuum parity", parity_deviation(W0), 1e-10))
    return out


def _radon(ctx: Context) -> list:
    out = []
    x = ctx.grid.points
    w0 = ctx.tomograms["fock:0"]
    out.append(Check("radon", "vacuum tomogram closed form",
                     float(np.max(np.abs(w0.w - np.exp(-x * x)[None, :] / np.sqrt(np.pi)))), 1e-8))
    for name, w in ctx.tomograms.items():
        out.append(Check("radon", f"{name} slice norms", float(np.max(np.abs(w.slice_norms() - 1))), 1e-8))
        out.append(Check("radon", f"{name} symmetry w(X,pi) = w(-X,0)", w.symmetry_residual(), 1e-4))
    e = ctx.states[5]
    via_w = tomogram_from_wigner(wigner_from_density(e.rho), ctx.agrid)
    out.append(Check("radon", f"{e.name} Radon route = density route",
                     float(np.max(np.abs(via_w.w - ctx.tomograms[e.name].w))), 1e-4))
    for n in range(3):
        psi = fock(n, ctx.grid)
        rec = density_from_tomogram(ctx.tomograms[f"fock:{n}"], ctx.grid, ctx.filt)
        out.append(Check("radon", f"fock:{n} reconstruction fidelity deficit", 1 - rec.fidelity(psi), 1e-3))
    return out


def _tomops(ctx: Context) -> list:
    out = []
    T = ctx.tomograms
    N = op_N()
    for n in range(4):
        w = T[f"fock:{n}"]
        r = N.apply(w)
        out.append(Check("tomops", f"op_N fock:{n} eigenvalue {n}",
                         float(np.linalg.norm(r - n * w.w) / np.linalg.norm(w.w)), ctx.tol(1e-3)))
    comm = compose([op_a(), op_adag()]) - compose([op_adag(), op_a()])
    w = T["fock:0"]
    out.append(Check("tomops", "[a, adag] w = w on vacuum",
                     float(np.max(np.abs(comm.apply(w) - w.w)) / np.max(w.w)), ctx.tol(1e-3)))
    ops = ("q", "p", "q2", "p2", "N")
    for e in ctx.states:
        w = T[e.name]
        dev = max(abs(expectation(operator(k), w) - e.moments[k]) for k in ops)
        dev = max(dev, abs(expectation(operator("qp") - identity() * 0.5j, w) - e.moments["qp_sym"]))
        out.append(Check("tomops", f"{e.name} expectations vs closed form", float(dev), ctx.tol(1e-3)))
        spread = max(theta_spread(operator(k), w) for k in ops)
        out.append(Check("tomops", f"{e.name} theta independence", spread, ctx.tol(1e-4)))
    e = ctx.states[6]
    w = T[e.name]
    W = wigner_from_density(e.rho)
    q, p = W.qgrid.points[:, None], W.pgrid.points[None, :]
    pairs = (
        ("dW/dq", rule_dq, ng.deriv_x(W.w, W.qgrid, axis=0)),
        ("q W", rule_qmul, q * W.w),
        ("dW/dp", rule_dp, ng.deriv_x(W.w, W.pgrid, axis=1)),
        ("p W", rule_pmul, p * W.w),
    )
    for label, rule, arr in pairs:
        lhs = tomogram_from_wigner(WignerFunction(W.qgrid, W.pgrid, arr), ctx.agrid).w
        out.append(Check("tomops", f"{e.name} rule {label}", float(np.max(np.abs(lhs - rule(w)))), ctx.tol(1e-4)))
    a2, a3 = 1.0, 1j
    prod = MultimodeTomogram((ctx.tomograms["fock:0"],
                              tomogram_from_density(density_from_pure(coherent(a2, ctx.grid)), ctx.agrid),
                              tomogram_from_density(density_from_pure(coherent(a3, ctx.grid)), ctx.agrid)))
    out.append(Check("tomops", "op_l(1) on coherent(1) x coherent(i)", abs(expectation(op_l(1), prod) - 2), ctx.tol(1e-3)))
    return out


def _symbols(ctx: Context) -> list:
    out = []
    names = ("q", "p", "q2", "p2", "qp", "N")
    mats = {k: operator_matrix(k, ctx.grid) for k in names}
    duals = {k: dual_regular(k) for k in names}
    for e in ctx.states:
        w = ctx.tomograms[e.name]
        dev = max(abs(matrix_expectation(mats[k], e.rho) - expect(duals[k], w)) for k in names)
        out.append(Check("symbols", f"{e.name} matrix vs regular dual", float(dev), ctx.tol(1e-3)))
        if e.name.startswith("coherent"):
            dev = max(abs(expect(dual_singular(k), w) - expect(dual_regular(k), w)) for k in ("q", "p", "qp"))
            out.append(Check("symbols", f"{e.name} singular vs regular dual", float(dev), ctx.tol(1e-5)))
        worst = max(rule_residual(r, w) for r in regularization_table())
        out.append(Check("symbols", f"{e.name} regularization table", worst, ctx.tol(1e-4)))
    return out


SUITES = {
    "numgrid": _numgrid,
    "states": _states,
    "phasespace": _phasespace,
    "radon": _radon,
    "tomops": _tomops,
    "symbols": _symbols,
}


def run_suites(names, ctx: Context | None = None) -> list:
    ctx = ctx or Context()
    if names == "all" or names == ["all"]:
        names = list(SUITES)
    checks = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
        checks.extend(SUITES[name](ctx))
    return checks


__all__ = ["Check", "Context", "SUITES", "run_suites"]
