"""Operators acting directly on optical tomograms.

An operator is a finite sum of normal-ordered terms::

    c(theta_1, ..., theta_n) * prod_k X_k^a_k D_k^m_k dtheta_k^d_k

where ``D_k^m`` is ``(d/dX_k)^m`` for ``m > 0`` and ``J^|m|`` for ``m < 0``,
with ``J`` the whole-line inverse X-derivative (convolution with
``sign(X)/2``).  Terms are applied right to left, so theta-derivatives
always act on the tomogram itself, where the ``theta + pi`` symmetry
supplies the boundary data.  Products are normal-ordered exactly with::

    dtheta c = c' + c dtheta          D^m X^a = sum_l binom(m, l) a!/(a-l)! X^(a-l) D^(m-l)

the second being valid for negative ``m`` too.  Coefficients are sympy
expressions in the angle symbols returned by :func:`theta_symbol`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, prod

import numpy as np
import sympy as sp

from .errors import DimensionError, RepresentationError, ZeroModeError
from .numgrid import (
    AngleGrid,
    Grid1D,
    deriv_theta,
    integrate,
    integrate_fp,
    inverse_dx,
    theta_integrate,
)
from .radon import MultimodeTomogram, OpticalTomogram
from .states import UNIT, ModeParams

ZERO_MODE_TOL = 1e-6


@lru_cache(maxsize=None)
def theta_symbol(mode: int) -> sp.Symbol:
    return sp.Symbol(f"theta{mode}", real=True)


@lru_cache(maxsize=None)
def x_symbol(mode: int) -> sp.Symbol:
    return sp.Symbol(f"X{mode}", real=True)


def _exact(x) -> sp.Expr:
    if isinstance(x, sp.Basic):
        return x
    if isinstance(x, complex):
        return _exact(x.real) + sp.I * _exact(x.imag)
    return sp.nsimplify(x, rational=True)


def _gbinom(m: int, l: int) -> int:
    """Generalized binomial ``m (m-1) ... (m-l+1) / l!`` for any integer m."""
    return prod(m - j for j in range(l)) // factorial(l)


def _falling(a: int, l: int) -> int:
    return factorial(a) // factorial(a - l) if l <= a else 0


def _key(factors: dict) -> tuple:
    return tuple(sorted((k, a, m, d) for k, (a, m, d) in factors.items() if (a, m, d) != (0, 0, 0)))


def _factors(key: tuple) -> dict:
    return {k: (a, m, d) for k, a, m, d in key}


def _mul_terms(k1, c1, k2, c2):
    """Normal-ordered product of two terms as a list of (key, coef)."""
    f1, f2 = _factors(k1), _factors(k2)
    modes = sorted(set(f1) | set(f2))
    choices = []
    for k in modes:
        a1, m1, d1 = f1.get(k, (0, 0, 0))
        a2, m2, d2 = f2.get(k, (0, 0, 0))
        opts = []
        for j in range(d1 + 1):
            for l in range(a2 + 1):
                w = comb(d1, j) * _gbinom(m1, l) * _falling(a2, l)
                if w:
                    opts.append((k, j, w, (a1 + a2 - l, m1 - l + m2, d1 - j + d2)))
        choices.append(opts)
    out = []
    for combo in itertools.product(*choices):
        coef = c2
        weight = 1
        new = {}
        for k, j, w, fac in combo:
            if j:
                coef = sp.diff(coef, theta_symbol(k), j)
            weight *= w
            new[k] = fac
        out.append((_key(new), sp.expand(weight * c1 * coef)))
    return out


def _simplify(c: sp.Expr) -> sp.Expr:
    return sp.simplify(sp.expand(sp.expand_trig(sp.expand(c, complex=False))))


@dataclass(frozen=True, eq=False)
class TomogramOperator:
    """Linear operator on tomograms built from normal-ordered terms."""

    terms: dict
    label: str = ""
    params: ModeParams = UNIT
    _compiled: dict = field(default_factory=dict, repr=False, compare=False)

    # ------------------------------------------------------------ algebra

    @property
    def mode_indices(self) -> tuple:
        modes = set()
        for key, c in self.terms.items():
            modes.update(k for k, *_ in key)
            for s in c.free_symbols:
                if s.name.startswith("theta"):
                    modes.add(int(s.name[5:]))
        return tuple(sorted(modes))

    def _check_params(self, other: "TomogramOperator"):
        if self.params != other.params:
            raise ValueError("operators built with different ModeParams cannot be combined")

    def __add__(self, other):
        if not isinstance(other, TomogramOperator):
            other = identity(self.params) * other
        self._check_params(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = sp.expand(terms.get(k, 0) + c)
        return TomogramOperator(_prune(terms), f"({self.label} + {other.label})", self.params)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, TomogramOperator):
            return self @ scalar
        s = _exact(scalar)
        terms = {k: sp.expand(s * c) for k, c in self.terms.items()}
        return TomogramOperator(_prune(terms), f"{scalar}*{self.label}", self.params)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1 / _exact(scalar))

    def __matmul__(self, other: "TomogramOperator") -> "TomogramOperator":
        """Operator product; ``other`` acts first."""
        self._check_params(other)
        terms: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                for k, c in _mul_terms(k1, c1, k2, c2):
                    terms[k] = terms.get(k, 0) + c
        return TomogramOperator(_prune(terms), f"{self.label} {other.label}", self.params)

    def simplified(self) -> "TomogramOperator":
        terms = {k: _simplify(c) for k, c in self.terms.items()}
        return TomogramOperator(_prune(terms), self.label, self.params)

    def equals(self, other: "TomogramOperator") -> bool:
        """Exact symbolic identity of the two operators."""
        diff = (self - other).simplified()
        return not diff.terms

    def max_power(self) -> int:
        return max((-m for key in self.terms for _, _, m, _ in key), default=0)

    def __repr__(self):
        return f"TomogramOperator({self.label!r}, {len(self.terms)} terms)"

    def pretty(self) -> str:
        parts = []
        for key, c in sorted(self.terms.items()):
            fac = []
            for k, a, m, d in key:
                if a:
                    fac.append(f"X{k}^{a}" if a > 1 else f"X{k}")
                if m > 0:
                    fac.append(f"dX{k}^{m}" if m > 1 else f"dX{k}")
                if m < 0:
                    fac.append(f"J{k}^{-m}" if m < -1 else f"J{k}")
                if d:
                    fac.append(f"dth{k}^{d}" if d > 1 else f"dth{k}")
            parts.append(f"({sp.simplify(c)}) " + " ".join(fac))
        return " + ".join(parts) if parts else "0"

    # ------------------------------------------------------------ numerics

    def _coef_fn(self, c: sp.Expr, modes: tuple):
        fn = self._compiled.get((c, modes))
        if fn is None:
            fn = sp.lambdify([theta_symbol(k) for k in modes], c, "numpy")
            self._compiled[(c, modes)] = fn
        return fn

    def apply(self, w, *, theta_method: str = "fd4", zero_mode_tol: float = ZERO_MODE_TOL):
        """Apply to an :class:`OpticalTomogram` or a :class:`MultimodeTomogram`.

        Single-mode input gives a complex ``(n_theta, n_x)`` array.  A product
        multimode input gives a :class:`FactorizedArray`; one with a joint
        array gives the transformed joint array.
        """
        if isinstance(w, OpticalTomogram):
            return _apply_single(self, w, theta_method, zero_mode_tol)
        if isinstance(w, MultimodeTomogram):
            if w.joint is not None:
                return _apply_joint(self, w, theta_method, zero_mode_tol)
            return _apply_factorized(self, w, theta_method, zero_mode_tol)
        raise RepresentationError(f"cannot apply a tomogram operator to {type(w).__name__}")

    __call__ = apply


def _prune(terms: dict) -> dict:
    out = {}
    for k, c in terms.items():
        c = sp.expand(c)
        if c != 0:
            out[k] = c
    return out


# ---------------------------------------------------------------- numerics


def _x_power(w: np.ndarray, m: int, xgrid: Grid1D, axis: int) -> np.ndarray:
    if m == 0:
        return w
    if m > 0:
        k = xgrid.wavenumbers
        mult = (1j * k) ** m
        if m % 2 and xgrid.n % 2 == 0:
            mult[xgrid.n // 2] = 0.0
        shape = [1] * w.ndim
        shape[axis] = xgrid.n
        return np.fft.ifft(np.fft.fft(w, axis=axis) * mult.reshape(shape), axis=axis)
    if m < -2:
        raise NotImplementedError("inverse X-derivatives beyond the second power are not supported")
    if np.iscomplexobj(w):
        return inverse_dx(w.real, xgrid, -m, axis) + 1j * inverse_dx(w.imag, xgrid, -m, axis)
    return inverse_dx(w, xgrid, -m, axis)


def _theta_power(w, d, agrid, xgrid, theta_axis, x_axis, method):
    out = w
    while d > 0:
        step = 2 if d >= 2 else 1
        if np.iscomplexobj(out):
            out = (deriv_theta(out.real, agrid, xgrid, step, theta_axis, x_axis, method)
                   + 1j * deriv_theta(out.imag, agrid, xgrid, step, theta_axis, x_axis, method))
        else:
            out = deriv_theta(out, agrid, xgrid, step, theta_axis, x_axis, method)
        d -= step
    return out


def _check_zero_mode(v, xgrid, axis, tol, scale=1.0):
    # scale: X-integral of |w| itself, so noise-level derivatives of theta-invariant tomograms pass
    total = integrate(v, xgrid, axis=axis)
    norm1 = integrate(np.abs(v), xgrid, axis=axis)
    bad = np.abs(total) > tol * np.maximum(norm1, scale)
    if np.any(bad):
        raise ZeroModeError(float(np.max(np.abs(total[bad]))), tol)


class _ModeCache:
    """Memoized ``X^a D^m dtheta^d w`` along one mode's axes."""

    def __init__(self, w, agrid, xgrid, theta_axis, x_axis, method, tol):
        self.w, self.agrid, self.xgrid = w, agrid, xgrid
        self.ta, self.xa, self.method, self.tol = theta_axis, x_axis, method, tol
        self._th: dict = {0: w}
        self._x: dict = {}
        self.scale = 1.0 if w is None else float(np.max(integrate(np.abs(w), xgrid, axis=x_axis)))

    def get(self, a, m, d, base=None):
        if base is not None:  # applying to an already transformed array (joint case)
            v = _theta_power(base, d, self.agrid, self.xgrid, self.ta, self.xa, self.method) if d else base
            if m < 0 and d > 0:
                _check_zero_mode(v, self.xgrid, self.xa, self.tol, self.scale)
            v = _x_power(v, m, self.xgrid, self.xa)
            return v * _bcast(self.xgrid.points ** a, v.ndim, self.xa) if a else v
        if d not in self._th:
            self._th[d] = _theta_power(self.w, d, self.agrid, self.xgrid, self.ta, self.xa, self.method)
        if (m, d) not in self._x:
            v = self._th[d]
            if m < 0 and d > 0:
                _check_zero_mode(v, self.xgrid, self.xa, self.tol, self.scale)
            self._x[(m, d)] = _x_power(v, m, self.xgrid, self.xa)
        v = self._x[(m, d)]
        return v * _bcast(self.xgrid.points ** a, v.ndim, self.xa) if a else v


def _bcast(v, ndim, axis):
    shape = [1] * ndim
    shape[axis] = v.size
    return v.reshape(shape)


def _apply_single(op, w: OpticalTomogram, method, tol):
    modes = op.mode_indices
    if len(modes) > 1:
        raise RepresentationError(f"{op.label} acts on modes {modes}; a single-mode tomogram was given")
    mode = modes[0] if modes else 0
    cache = _ModeCache(w.w, w.agrid, w.xgrid, 0, 1, method, tol)
    out = np.zeros(w.w.shape, dtype=complex)
    th = w.angles
    for key, c in op.terms.items():
        a, m, d = _factors(key).get(mode, (0, 0, 0))
        coef = np.broadcast_to(np.asarray(op._coef_fn(c, (mode,))(th), dtype=complex), th.shape)
        out += coef[:, None] * cache.get(a, m, d)
    return out


def _separate(c: sp.Expr, modes: tuple) -> list:
    """Write ``c`` as a sum of products of single-angle factors."""
    syms = [theta_symbol(k) for k in modes]
    expr = sp.expand(sp.expand_trig(sp.expand(c, power_exp=True)), power_exp=True)
    out = []
    for term in sp.Add.make_args(expr):
        rest = term
        parts = {}
        for k, s in zip(modes, syms):
            indep, dep = rest.as_independent(s, as_Add=False)
            parts[k] = dep
            rest = indep
        if rest.free_symbols & set(syms):
            raise RepresentationError(f"coefficient {c} does not separate across modes")
        out.append((complex(rest), parts))
    return out


@dataclass(frozen=True, eq=False)
class FactorizedArray:
    """Sum of products ``sum_i coef_i prod_k arrays_i[k]`` over modes (product-state output)."""

    grids: tuple  # per mode (AngleGrid, Grid1D)
    parts: list  # [(coef, tuple of per-mode arrays)]

    def integrate(self, finite_part: bool = True) -> complex:
        """``(1/pi^n) int ... dX dtheta`` factor by factor."""
        total = 0j
        for coef, arrays in self.parts:
            val = coef
            for (ag, xg), arr in zip(self.grids, arrays):
                xint = integrate_fp(arr, xg, axis=1) if finite_part else integrate(arr, xg, axis=1)
                val *= theta_integrate(xint, ag) / np.pi
            total += val
        return complex(total)


def _apply_factorized(op, w: MultimodeTomogram, method, tol):
    n = w.n_modes
    modes = tuple(range(n))
    if op.mode_indices and max(op.mode_indices) >= n:
        raise RepresentationError(f"{op.label} touches mode {max(op.mode_indices)} of a {n}-mode tomogram")
    caches = [_ModeCache(t.w, t.agrid, t.xgrid, 0, 1, method, tol) for t in w.modes]
    parts = []
    for key, c in op.terms.items():
        fac = _factors(key)
        for const, pieces in _separate(c, modes):
            arrays = []
            for k, t in enumerate(w.modes):
                v = caches[k].get(*fac.get(k, (0, 0, 0)))
                cf = pieces[k]
                if cf != 1:
                    vals = sp.lambdify([theta_symbol(k)], cf, "numpy")(t.angles)
                    v = np.broadcast_to(np.asarray(vals, dtype=complex), t.angles.shape)[:, None] * v
                arrays.append(v)
            parts.append((const, tuple(arrays)))
    return FactorizedArray(tuple((t.agrid, t.xgrid) for t in w.modes), parts)


def _apply_joint(op, w: MultimodeTomogram, method, tol):
    a_t, b_t = w.modes
    if op.mode_indices and max(op.mode_indices) >= 2:
        raise RepresentationError(f"{op.label} touches modes beyond the two stored in the joint array")
    specs = [(a_t, 0, 2), (b_t, 1, 3)]
    out = np.zeros(w.joint.shape, dtype=complex)
    th0 = a_t.angles[:, None, None, None]
    th1 = b_t.angles[None, :, None, None]
    for key, c in op.terms.items():
        fac = _factors(key)
        v = w.joint
        for k, (t, ta, xa) in enumerate(specs):
            a, m, d = fac.get(k, (0, 0, 0))
            if (a, m, d) != (0, 0, 0):
                v = _ModeCache(None, t.agrid, t.xgrid, ta, xa, method, tol).get(a, m, d, base=v)
        coef = op._coef_fn(c, (0, 1))(th0, th1)
        out += np.asarray(coef, dtype=complex) * v
    return out


# ---------------------------------------------------------------- primitives


def _prim(mode, a=0, m=0, d=0, c=1, label="", params=UNIT) -> TomogramOperator:
    return TomogramOperator(_prune({_key({mode: (a, m, d)}): _exact(c)}), label, params)


def identity(params: ModeParams = UNIT) -> TomogramOperator:
    return TomogramOperator({(): sp.Integer(1)}, "1", params)


def X(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    return _prim(mode, a=1, label=f"X{mode}", params=params)


def DX(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    return _prim(mode, m=1, label=f"dX{mode}", params=params)


def JX(mode: int = 0, power: int = 1, params: ModeParams = UNIT) -> TomogramOperator:
    """``[d/dX]^-power``."""
    return _prim(mode, m=-power, label=f"J{mode}^{power}", params=params)


def DT(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    return _prim(mode, d=1, label=f"dtheta{mode}", params=params)


def C(expr, mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    """Multiplication by a function of theta given as a callable of the angle symbol."""
    e = expr(theta_symbol(mode)) if callable(expr) else _exact(expr)
    return TomogramOperator(_prune({(): sp.expand(e)}), str(e), params)


# ---------------------------------------------------------------- correspondence rules


def rule_dq_op(mode: int = 0) -> TomogramOperator:
    return C(sp.cos, mode) @ DX(mode)


def rule_dp_op(mode: int = 0) -> TomogramOperator:
    return C(sp.sin, mode) @ DX(mode)


def rule_qmul_op(mode: int = 0) -> TomogramOperator:
    return C(sp.sin, mode) @ JX(mode) @ DT(mode) + X(mode) @ C(sp.cos, mode)


def rule_pmul_op(mode: int = 0) -> TomogramOperator:
    return -(C(sp.cos, mode) @ JX(mode) @ DT(mode)) + X(mode) @ C(sp.sin, mode)


def _real_rule(op, w, theta_method="fd4"):
    return np.real(op.apply(w, theta_method=theta_method))


def rule_dq(w: OpticalTomogram) -> np.ndarray:
    """Tomographic image of dW/dq: ``cos(theta) dw/dX``."""
    return _real_rule(rule_dq_op(), w)


def rule_dp(w: OpticalTomogram) -> np.ndarray:
    """Tomographic image of dW/dp: ``sin(theta) dw/dX``."""
    return _real_rule(rule_dp_op(), w)


def rule_qmul(w: OpticalTomogram, theta_method: str = "fd4") -> np.ndarray:
    """Tomographic image of q W: ``(sin J dtheta + X cos) w``."""
    return _real_rule(rule_qmul_op(), w, theta_method)


def rule_pmul(w: OpticalTomogram, theta_method: str = "fd4") -> np.ndarray:
    """Tomographic image of p W: ``(-cos J dtheta + X sin) w``."""
    return _real_rule(rule_pmul_op(), w, theta_method)


# ---------------------------------------------------------------- operator table


def op_q(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    h = _exact(params.length2)
    s, c = (lambda t: sp.sin(t)), (lambda t: sp.cos(t))
    op = (C(s, mode, params) @ JX(mode, 1, params) @ DT(mode, params)
          + X(mode, params) @ C(c, mode, params)
          + (sp.I / 2) * h * (C(s, mode, params) @ DX(mode, params)))
    return _named(op, f"q{mode}")


def op_p(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    mw = _exact(params.m_omega)
    hbar = _exact(params.hbar)
    s, c = (lambda t: sp.sin(t)), (lambda t: sp.cos(t))
    op = (mw * (-(C(c, mode, params) @ JX(mode, 1, params) @ DT(mode, params))
                + X(mode, params) @ C(s, mode, params))
          - (sp.I * hbar / 2) * (C(c, mode, params) @ DX(mode, params)))
    return _named(op, f"p{mode}")


def _pieces(mode, params):
    one = identity(params)
    J1, J2 = JX(mode, 1, params), JX(mode, 2, params)
    Xm, Dx, Dt = X(mode, params), DX(mode, params), DT(mode, params)
    Dt2 = Dt @ Dt

    def c(f):
        return C(f, mode, params)

    return one, J1, J2, Xm, Dx, Dt, Dt2, c


def op_q2(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    h = _exact(params.length2)
    one, J1, J2, Xm, Dx, Dt, Dt2, c = _pieces(mode, params)
    sin2 = c(lambda t: sp.sin(t) ** 2)
    op = (sin2 @ J2 @ (Dt2 + one)
          + Xm @ J1 @ (c(lambda t: sp.sin(2 * t)) @ Dt - sin2)
          + Xm @ Xm @ c(lambda t: sp.cos(t) ** 2)
          + sp.I * h * (sin2 @ Dt + c(lambda t: sp.sin(2 * t) / 2) @ (one + Xm @ Dx))
          - (h * h / 4) * (sin2 @ Dx @ Dx))
    return _named(op, f"q{mode}^2")


def op_p2(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    mw = _exact(params.m_omega)
    hbar = _exact(params.hbar)
    one, J1, J2, Xm, Dx, Dt, Dt2, c = _pieces(mode, params)
    cos2 = c(lambda t: sp.cos(t) ** 2)
    op = (mw**2 * (cos2 @ J2 @ (Dt2 + one)
                   - Xm @ J1 @ (c(lambda t: sp.sin(2 * t)) @ Dt + cos2)
                   + Xm @ Xm @ c(lambda t: sp.sin(t) ** 2))
          + sp.I * hbar * mw * (cos2 @ Dt - c(lambda t: sp.sin(2 * t) / 2) @ (one + Xm @ Dx))
          - (hbar**2 / 4) * (cos2 @ Dx @ Dx))
    return _named(op, f"p{mode}^2")


def op_qp(mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    """The (non-Hermitian) product q p, q acting last."""
    mw = _exact(params.m_omega)
    hbar = _exact(params.hbar)
    one, J1, J2, Xm, Dx, Dt, Dt2, c = _pieces(mode, params)
    half_sin2 = c(lambda t: sp.sin(2 * t) / 2)
    op = (mw * (-(half_sin2 @ J2 @ (Dt2 + one))
                + Xm @ J1 @ (half_sin2 - c(lambda t: sp.cos(2 * t)) @ Dt)
                + Xm @ Xm @ half_sin2)
          - sp.I * hbar * ((Xm @ Dx @ c(lambda t: sp.cos(2 * t))) / 2
                           + half_sin2 @ Dt
                           - c(lambda t: sp.sin(t) ** 2))
          + (hbar**2 / (8 * mw)) * (c(lambda t: sp.sin(2 * t)) @ Dx @ Dx))
    return _named(op, f"q{mode}p{mode}")


def op_a(mode: int = 0) -> TomogramOperator:
    one, J1, J2, Xm, Dx, Dt, Dt2, c = _pieces(mode, UNIT)
    op = c(lambda t: sp.exp(sp.I * t) / sp.sqrt(2)) @ (Dx / 2 + Xm - sp.I * (J1 @ Dt))
    return _named(op, f"a{mode}")


def op_adag(mode: int = 0) -> TomogramOperator:
    one, J1, J2, Xm, Dx, Dt, Dt2, c = _pieces(mode, UNIT)
    op = c(lambda t: sp.exp(-sp.I * t) / sp.sqrt(2)) @ (Xm - Dx / 2 + sp.I * (J1 @ Dt))
    return _named(op, f"a{mode}^+")


def op_N(mode: int = 0) -> TomogramOperator:
    one, J1, J2, Xm, Dx, Dt, Dt2, c = _pieces(mode, UNIT)
    op = (J2 @ (Dt2 + one) + Xm @ Xm - Xm @ J1 - (Dx @ Dx) / 4 + sp.I * Dt - one) / 2
    return _named(op, f"N{mode}")


DEFAULT_L_MODES = {1: (1, 2), 2: (2, 0), 3: (0, 1)}


def _l_brace(j: int, k: int) -> TomogramOperator:
    one, J1j, _, Xj, Dxj, Dtj, _, cj = _pieces(j, UNIT)
    _, J1k, _, Xk, Dxk, Dtk, _, ck = _pieces(k, UNIT)
    sin, cos = (lambda t: sp.sin(t)), (lambda t: sp.cos(t))
    Qj = cj(sin) @ J1j @ Dtj + Xj @ cj(cos)
    Pk = -(ck(cos) @ J1k @ Dtk) + Xk @ ck(sin)
    return (Qj @ ck(cos) @ Dxk / 2
            + sp.I * (Qj @ Pk)
            + (sp.I / 4) * (cj(sin) @ Dxj @ ck(cos) @ Dxk)
            + (cj(sin) @ Dxj / 2) @ (ck(cos) @ J1k @ Dtk - Xk @ ck(sin)))


def op_l(axis: int, modes: tuple | None = None) -> TomogramOperator:
    """Angular-momentum component ``l_axis = q_j p_k - p_j q_k``.

    ``modes = (j, k)`` picks the two modes; the default is the cyclic
    assignment in a three-mode system, ``l1 -> (1, 2)``, ``l2 -> (2, 0)``,
    ``l3 -> (0, 1)`` (zero-based).
    """
    if axis not in DEFAULT_L_MODES:
        raise ValueError("axis must be 1, 2 or 3")
    j, k = modes if modes is not None else DEFAULT_L_MODES[axis]
    if j == k:
        raise ValueError("angular momentum needs two distinct modes")
    op = -sp.I * _l_brace(j, k) + sp.I * _l_brace(k, j)
    return _named(op, f"l{axis}[{j},{k}]")


def _named(op: TomogramOperator, label: str) -> TomogramOperator:
    return TomogramOperator(op.terms, label, op.params)


def compose(ops, coeffs=None) -> TomogramOperator:
    """Products and sums of operators.

    ``compose([A, B, C])`` is the product ``A B C`` (``C`` acts first);
    ``compose([[A, B], [C]], coeffs=[c1, c2])`` is ``c1 A B + c2 C``.
    The empty product is the identity.
    """
    if coeffs is None:
        params = ops[0].params if ops else UNIT
        out = identity(params)
        for op in ops:
            out = out @ op
        return _named(out, " ".join(o.label for o in ops) or "1")
    if len(coeffs) != len(ops):
        raise ValueError("need one coefficient per product")
    prods = [compose(list(p)) for p in ops]
    out = None
    for cf, p in zip(coeffs, prods):
        out = p * cf if out is None else out + p * cf
    return out if out is not None else identity() * 0


# ---------------------------------------------------------------- expectations


def slice_expectations(op: TomogramOperator, w: OpticalTomogram, theta_method: str = "fd4") -> np.ndarray:
    """``int R[A] w dX`` per angle (finite-part integral); constant in theta for a valid operator."""
    return integrate_fp(op.apply(w, theta_method=theta_method), w.xgrid, axis=1)


def expectation(op: TomogramOperator, w, theta_method: str = "fd4") -> complex:
    """``(1/pi^n) int R[A] w d^nX d^ntheta`` with finite-part X-integrals."""
    if isinstance(w, OpticalTomogram):
        vals = slice_expectations(op, w, theta_method)
        return complex(theta_integrate(vals, w.agrid) / np.pi)
    if isinstance(w, MultimodeTomogram):
        res = op.apply(w, theta_method=theta_method)
        if isinstance(res, FactorizedArray):
            return res.integrate()
        a_t, b_t = w.modes
        v = integrate_fp(res, b_t.xgrid, axis=3)
        v = integrate_fp(v, a_t.xgrid, axis=2)
        return complex(theta_integrate(theta_integrate(v, b_t.agrid, axis=1), a_t.agrid, axis=0) / np.pi**2)
    raise RepresentationError(f"cannot take an expectation over {type(w).__name__}")


def theta_spread(op: TomogramOperator, w: OpticalTomogram, theta_method: str = "fd4") -> float:
    """Relative spread ``(max - min) / max(1, |mean|)`` of the per-angle expectations."""
    vals = slice_expectations(op, w, theta_method)
    spread = max(np.ptp(vals.real), np.ptp(vals.imag))
    return float(spread / max(1.0, abs(vals.mean())))


OPERATORS = {
    "q": op_q,
    "p": op_p,
    "q2": op_q2,
    "p2": op_p2,
    "qp": op_qp,
    "a": op_a,
    "adag": op_adag,
    "N": op_N,
}


def operator(name: str, mode: int = 0, params: ModeParams = UNIT) -> TomogramOperator:
    if name == "one":
        return identity(params)
    if name not in OPERATORS:
        raise KeyError(f"unknown operator {name!r}; choose from {sorted(OPERATORS)}")
    fn = OPERATORS[name]
    if name in ("a", "adag", "N"):
        if params != UNIT:
            raise ValueError(f"{name} is defined in oscillator units only")
        return fn(mode)
    return fn(mode, params)


__all__ = [
    "TomogramOperator",
    "FactorizedArray",
    "theta_symbol",
    "x_symbol",
    "identity",
    "X",
    "DX",
    "JX",
    "DT",
    "C",
    "rule_dq",
    "rule_dp",
    "rule_qmul",
    "rule_pmul",
    "rule_dq_op",
    "rule_dp_op",
    "rule_qmul_op",
    "rule_pmul_op",
    "op_q",
    "op_p",
    "op_q2",
    "op_p2",
    "op_qp",
    "op_a",
    "op_adag",
    "op_N",
    "op_l",
    "compose",
    "expectation",
    "slice_expectations",
    "theta_spread",
    "operator",
    "OPERATORS",
    "DEFAULT_L_MODES",
]
