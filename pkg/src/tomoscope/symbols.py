"""Symbols and dual symbols of operators on the optical tomogram.

The symbol of an operator is ``w_A(X, theta) = <X, theta| A |X, theta>``;
a dual symbol ``w_A^(d)`` is any function (or distribution) with
``<A> = int w_A^(d) w dX dtheta``.  Regular dual symbols are smooth
weights; singular ones concentrate on a few angles.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import sympy as sp

from .errors import RepresentationError
from .numgrid import AngleGrid, Grid1D, integrate, integrate_fp, reflect_x, theta_integrate
from .radon import MultimodeTomogram, OpticalTomogram, _oscillator_basis
from .states import UNIT, DensityMatrix, ModeParams
from .tomops import (
    DT,
    DX,
    JX,
    X,
    C,
    TomogramOperator,
    _exact,
    _factors,
    theta_symbol,
    x_symbol,
)

# ---------------------------------------------------------------- matrix oracle


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Operator kernel ``A(q, q')`` sampled on a grid.

    ``matrix`` (kernel times dq) acts on sampled wavefunctions.
    """

    grid: Grid1D
    a: np.ndarray

    def __post_init__(self):
        if self.a.shape != (self.grid.n, self.grid.n):
            raise ValueError("operator kernel must be n x n on the grid")
        if not np.all(np.isfinite(self.a)):
            raise ValueError("operator kernel has non-finite entries")

    @property
    def matrix(self) -> np.ndarray:
        return self.a * self.grid.dx

    @classmethod
    def from_matrix(cls, grid: Grid1D, m: np.ndarray) -> "OperatorMatrix":
        return cls(grid, np.asarray(m, dtype=complex) / grid.dx)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix.from_matrix(self.grid, self.matrix @ other.matrix)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.a + other.a)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.a - other.a)

    def __mul__(self, s) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.a * s)

    __rmul__ = __mul__

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.a.conj().T)


def _derivative_matrix(grid: Grid1D) -> np.ndarray:
    k = grid.wavenumbers.astype(complex)
    mult = 1j * k
    if grid.n % 2 == 0:
        mult[grid.n // 2] = 0.0
    F = np.fft.fft(np.eye(grid.n), axis=0)
    return np.real(np.fft.ifft(mult[:, None] * F, axis=0))


def operator_matrix(name: str, grid: Grid1D, params: ModeParams = UNIT) -> OperatorMatrix:
    """Coordinate-representation matrix of a named operator.

    ``p = -i hbar d/dq`` uses the spectral derivative; products are matrix
    products, so ``q2 = q q`` and ``p2 = p p`` exactly on the grid.
    """
    eye = np.eye(grid.n, dtype=complex)
    Q = np.diag(grid.points).astype(complex)
    P = -1j * params.hbar * _derivative_matrix(grid)
    ell2 = params.length2
    A = (Q / np.sqrt(ell2) + 1j * P * np.sqrt(ell2) / params.hbar) / np.sqrt(2)
    Ad = A.conj().T
    table = {
        "one": lambda: eye,
        "q": lambda: Q,
        "p": lambda: P,
        "q2": lambda: Q @ Q,
        "p2": lambda: P @ P,
        "qp": lambda: Q @ P,
        "qp_sym": lambda: 0.5 * (Q @ P + P @ Q),
        "a": lambda: A,
        "adag": lambda: Ad,
        "N": lambda: Ad @ A,
    }
    if name not in table:
        raise KeyError(f"unknown operator {name!r}; choose from {sorted(table)}")
    return OperatorMatrix.from_matrix(grid, table[name]())


def matrix_expectation(A: OperatorMatrix, rho: DensityMatrix) -> complex:
    """``Tr(rho A)``."""
    if A.grid != rho.grid:
        raise ValueError("operator and state live on different grids")
    return complex(np.trace(rho.matrix @ A.matrix))


def symbol_of(A: OperatorMatrix, agrid: AngleGrid, xgrid: Grid1D | None = None,
              params: ModeParams = UNIT) -> np.ndarray:
    """``<X, theta| A |X, theta>`` sampled on the tomogram grid.

    Uses the grid propagator for every angle: the diagonal of
    ``U(theta) A U(theta)^H`` divided by dq.  For a density matrix this is
    its tomogram; for the identity it is the constant ``1/dq`` (the
    discretized ``delta(0)``).
    """
    grid = A.grid
    xgrid = xgrid or grid
    E, V = _oscillator_basis(grid, params.length2)
    B = V.conj().T @ A.matrix @ V
    out = np.empty((agrid.n_theta, xgrid.n), dtype=complex)
    for i, th in enumerate(agrid.angles):
        ph = np.exp(-1j * th * E)
        M = V @ (ph[:, None] * B * ph.conj()[None, :])
        d = np.einsum("ij,ij->i", M, V.conj()) / grid.dx
        if xgrid == grid:
            out[i] = d
        else:
            out[i] = (np.interp(xgrid.points, grid.points, d.real, left=0.0, right=0.0)
                      + 1j * np.interp(xgrid.points, grid.points, d.imag, left=0.0, right=0.0))
    return out


# ---------------------------------------------------------------- regular dual symbols


@dataclass(frozen=True, eq=False)
class RegularDualSymbol:
    """Smooth dual symbol given as a sympy expression in ``X_k`` and ``theta_k``.

    ``modes`` lists the modes the expression refers to; every other mode of
    a multimode tomogram is paired with the identity's dual ``1/pi``.
    """

    expr: sp.Expr
    label: str
    modes: tuple = (0,)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def evaluate(self, agrid: AngleGrid, xgrid: Grid1D) -> np.ndarray:
        """Values on the ``(n_theta, n_x)`` grid of a single-mode symbol."""
        if len(self.modes) != 1:
            raise RepresentationError(f"{self.label} is a {len(self.modes)}-mode symbol")
        k = self.modes[0]
        fn = sp.lambdify([x_symbol(k), theta_symbol(k)], self.expr, "numpy")
        vals = fn(xgrid.points[None, :], agrid.angles[:, None])
        return np.broadcast_to(np.asarray(vals, dtype=complex), (agrid.n_theta, xgrid.n))

    def separated(self) -> list:
        """The expression as ``[(const, {mode: factor(X_k, theta_k)})]``."""
        syms = {k: (x_symbol(k), theta_symbol(k)) for k in self.modes}
        expr = sp.expand(sp.expand_trig(sp.expand(self.expr, power_exp=True)), power_exp=True)
        out = []
        for term in sp.Add.make_args(expr):
            rest = term
            parts = {}
            for k, (xs, ts) in syms.items():
                indep, dep = rest.as_independent(xs, ts, as_Add=False)
                parts[k] = dep
                rest = indep
            out.append((complex(rest), parts))
        return out

    def __add__(self, other: "RegularDualSymbol") -> "RegularDualSymbol":
        modes = tuple(sorted(set(self.modes) | set(other.modes)))
        return RegularDualSymbol(sp.expand(self.expr + other.expr), f"{self.label}+{other.label}", modes)

    def __mul__(self, s) -> "RegularDualSymbol":
        return RegularDualSymbol(sp.expand(_exact(s) * self.expr), f"{s}*{self.label}", self.modes)

    __rmul__ = __mul__

    def conjugate(self) -> "RegularDualSymbol":
        return RegularDualSymbol(sp.expand(sp.conjugate(self.expr)), f"conj({self.label})", self.modes)


def _closed_forms(mode: int, params: ModeParams):
    Xs, th = x_symbol(mode), theta_symbol(mode)
    pi = sp.pi
    mw = _exact(params.m_omega)
    hbar = _exact(params.hbar)
    return {
        "one": 1 / pi,
        "q": 2 / pi * Xs * sp.cos(th),
        "p": mw * 2 / pi * Xs * sp.sin(th),
        "q2": Xs**2 / pi * (1 + 2 * sp.cos(2 * th)),
        "p2": mw**2 * Xs**2 / pi * (1 - 2 * sp.cos(2 * th)),
        "qp": mw * 2 / pi * Xs**2 * sp.sin(2 * th) + sp.I * hbar / (2 * pi),
        "a": sp.sqrt(2) / pi * Xs * (sp.cos(th) + sp.I * sp.sin(th)),
        "adag": sp.sqrt(2) / pi * Xs * (sp.cos(th) - sp.I * sp.sin(th)),
        "N": (Xs**2 - sp.Rational(1, 2)) / pi,
    }


REGULAR_NAMES = ("one", "q", "p", "q2", "p2", "qp", "a", "adag", "N", "l1", "l2", "l3")


def dual_regular(name: str, mode: int = 0, params: ModeParams = UNIT,
                 modes: tuple | None = None) -> RegularDualSymbol:
    """Closed-form regular dual symbol.

    Single-mode names take ``mode``; ``l1``, ``l2``, ``l3`` take the two
    modes ``(j, k)`` (default: the cyclic three-mode assignment of
    :func:`tomoscope.tomops.op_l`) and give ``(4/pi^2) X_j X_k sin(theta_k - theta_j)``.
    """
    if name in ("l1", "l2", "l3"):
        from .tomops import DEFAULT_L_MODES

        j, k = modes if modes is not None else DEFAULT_L_MODES[int(name[1])]
        expr = 4 / sp.pi**2 * x_symbol(j) * x_symbol(k) * sp.sin(theta_symbol(k) - theta_symbol(j))
        return RegularDualSymbol(expr, f"{name}[{j},{k}]", (j, k))
    forms = _closed_forms(mode, params)
    if name not in forms:
        raise KeyError(f"unknown dual symbol {name!r}; choose from {REGULAR_NAMES}")
    if name in ("a", "adag", "N") and params != UNIT:
        raise ValueError(f"{name} is defined in oscillator units only")
    return RegularDualSymbol(sp.sympify(forms[name]), name, (mode,))


# ---------------------------------------------------------------- singular dual symbols


@dataclass(frozen=True)
class SingularDualSymbol:
    """``sum_i g_i(X) delta(theta - theta_i) + c``.

    ``delta_terms`` holds ``(theta_i, g_i)`` pairs; the constant ``c`` pairs
    as ``c * int int w dX dtheta``.
    """

    delta_terms: tuple
    constant_term: complex = 0j
    label: str = ""


def dual_singular(name: str, theta0: float = 0.0, params: ModeParams = UNIT) -> SingularDualSymbol:
    """Delta-concentrated dual symbols of ``one``, ``q``, ``p`` and ``qp``.

    ``theta0`` is the reference angle of the identity's symbol.
    """
    mw = params.m_omega
    if name == "one":
        return SingularDualSymbol(((theta0, lambda x: np.ones_like(x)),), 0j, "one")
    if name == "q":
        return SingularDualSymbol(((0.0, lambda x: x),), 0j, "q")
    if name == "p":
        return SingularDualSymbol(((np.pi / 2, lambda x: mw * x),), 0j, "p")
    if name == "qp":
        terms = (
            (np.pi / 4, lambda x: mw * x * x),
            (0.0, lambda x: -0.5 * mw * x * x),
            (np.pi / 2, lambda x: -0.5 * mw * x * x),
        )
        return SingularDualSymbol(terms, 1j * params.hbar / (2 * np.pi), "qp")
    raise KeyError(f"no singular dual symbol for {name!r}; choose from one, q, p, qp")


def slice_at(w: OpticalTomogram, theta: float) -> np.ndarray:
    """``w(X, theta)`` for any angle: reduce to [0, pi) by symmetry, then interpolate linearly."""
    k, r = divmod(float(theta), np.pi)
    pos = r / w.agrid.dtheta
    i = int(np.floor(pos))
    f = pos - i
    if f < 1e-9:
        f = 0.0
    elif f > 1 - 1e-9:
        i, f = i + 1, 0.0
    n = w.agrid.n_theta

    def row(j):
        return w.w[j] if j < n else reflect_x(w.w[j - n], w.xgrid)

    out = row(i) if f == 0.0 else (1 - f) * row(i) + f * row(i + 1)
    return reflect_x(out, w.xgrid) if int(k) % 2 else out


# ---------------------------------------------------------------- pairing


def _pair_single(sym: RegularDualSymbol, w: OpticalTomogram) -> complex:
    vals = sym.evaluate(w.agrid, w.xgrid)
    return complex(theta_integrate(integrate(vals * w.w, w.xgrid, axis=1), w.agrid))


def _pair_factor(expr: sp.Expr, k: int, t: OpticalTomogram, arr: np.ndarray | None = None) -> complex:
    arr = t.w if arr is None else arr
    if expr == 1:
        vals = 1.0
    else:
        fn = sp.lambdify([x_symbol(k), theta_symbol(k)], expr, "numpy")
        vals = np.asarray(fn(t.xgrid.points[None, :], t.angles[:, None]), dtype=complex)
    return complex(theta_integrate(integrate(vals * arr, t.xgrid, axis=1), t.agrid))


def expect(sym, w) -> complex:
    """Expectation value ``int w_A^(d) w d^nX d^ntheta``.

    Product multimode tomograms are paired factor by factor; modes not named
    by the symbol contribute ``(1/pi) int int w dX dtheta``.
    """
    if isinstance(sym, SingularDualSymbol):
        if not isinstance(w, OpticalTomogram):
            raise RepresentationError("singular dual symbols pair with single-mode tomograms")
        total = 0j
        for th0, g in sym.delta_terms:
            total += complex(integrate(g(w.xgrid.points) * slice_at(w, th0), w.xgrid))
        if sym.constant_term:
            total += sym.constant_term * complex(theta_integrate(integrate(w.w, w.xgrid, axis=1), w.agrid))
        return total
    if isinstance(w, OpticalTomogram):
        if sym.n_modes != 1:
            raise RepresentationError(f"{sym.label} needs a {sym.n_modes}-mode tomogram")
        return _pair_single(sym, w)
    if isinstance(w, MultimodeTomogram):
        if max(sym.modes) >= w.n_modes:
            raise RepresentationError(
                f"{sym.label} refers to mode {max(sym.modes)} of a {w.n_modes}-mode tomogram")
        if w.joint is not None and w.n_modes == 2:
            return _pair_joint(sym, w)
        total = 0j
        for const, parts in sym.separated():
            val = const
            for k, t in enumerate(w.modes):
                val *= _pair_factor(parts.get(k, 1 / sp.pi), k, t)
            total += val
        return total
    raise RepresentationError(f"cannot pair a dual symbol with {type(w).__name__}")


def _pair_joint(sym: RegularDualSymbol, w: MultimodeTomogram) -> complex:
    a_t, b_t = w.modes
    args = [x_symbol(0), x_symbol(1), theta_symbol(0), theta_symbol(1)]
    expr = sym.expr
    for k in (0, 1):
        if k not in sym.modes:
            expr = expr / sp.pi
    fn = sp.lambdify(args, expr, "numpy")
    vals = fn(a_t.xgrid.points[None, None, :, None], b_t.xgrid.points[None, None, None, :],
              a_t.angles[:, None, None, None], b_t.angles[None, :, None, None])
    v = integrate(integrate(np.asarray(vals, dtype=complex) * w.joint, b_t.xgrid, axis=3), a_t.xgrid, axis=2)
    return complex(theta_integrate(theta_integrate(v, b_t.agrid, axis=1), a_t.agrid, axis=0))


def dual_of_product(symA: RegularDualSymbol, opB: TomogramOperator, w, theta_method: str = "fd4") -> complex:
    """``<A B> = int w_A^(d) R[B] w``: the dual symbol of A paired with B applied to the tomogram."""
    res = opB.apply(w, theta_method=theta_method)
    if isinstance(w, OpticalTomogram):
        return complex(theta_integrate(integrate(symA.evaluate(w.agrid, w.xgrid) * res, w.xgrid, axis=1), w.agrid))
    if hasattr(res, "parts"):
        total = 0j
        for const, parts in symA.separated():
            for coef, arrays in res.parts:
                val = const * coef
                for k, t in enumerate(w.modes):
                    val *= _pair_factor(parts.get(k, 1 / sp.pi), k, t, arrays[k])
                total += val
        return total
    raise RepresentationError("dual_of_product supports single-mode and product tomograms")


# ---------------------------------------------------------------- regularization


def _ff(a: int, m: int) -> sp.Rational:
    """``a!/(a-m)!`` for any integer m (zero when m > a >= 0)."""
    if m >= 0:
        return sp.Integer(factorial(a) // factorial(a - m)) if m <= a else sp.Integer(0)
    return sp.Rational(factorial(a), factorial(a - m))


def _weight_parity_ok(c: sp.Expr, th: sp.Symbol, b: int) -> bool:
    """True when ``c(theta + pi) (-1)^b == c(theta)``, so theta boundary terms cancel."""
    shifted = c.subs(th, th + sp.pi) * (-1) ** b
    return sp.simplify(sp.expand_trig(shifted - c)) == 0


def regularize_term(key: tuple, c: sp.Expr, weight_power: dict | None = None) -> sp.Expr:
    """Regular weight equivalent of one normal-ordered operator term.

    Under ``int dX`` (finite part) and ``int_0^pi dtheta``::

        X^a D^m  ->  (-1)^m a!/(a-m)! X^(a-m)        (J^k is D^-k)
        c dtheta^d  ->  (-1)^d c^(d)

    ``weight_power`` gives extra powers of X from a test weight multiplying
    the term (used by the regularization table checks).
    """
    weight_power = weight_power or {}
    fac = _factors(key)
    modes = set(fac) | set(weight_power)
    expr = c
    xpart = sp.Integer(1)
    for k in sorted(modes):
        a, m, d = fac.get(k, (0, 0, 0))
        a += weight_power.get(k, 0)
        th = theta_symbol(k)
        b = a - m
        if d and not _weight_parity_ok(expr, th, b):
            raise ValueError(f"term {key} with coefficient {c} leaves theta boundary terms")
        expr = sp.Integer(-1) ** d * sp.diff(expr, th, d) if d else expr
        xpart *= sp.Integer(-1) ** m * _ff(a, m) * x_symbol(k) ** b
    return sp.expand(expr * xpart)


def derive_dual(op: TomogramOperator, modes: tuple | None = None) -> RegularDualSymbol:
    """Regular dual symbol of ``op`` obtained by integrating its terms by parts."""
    modes = modes or op.mode_indices or (0,)
    total = sp.Integer(0)
    for key, c in op.terms.items():
        total += regularize_term(key, c)
    expr = sp.expand(total / sp.pi ** len(modes))
    return RegularDualSymbol(expr, f"derived({op.label})", tuple(modes))


def canonical(sym: RegularDualSymbol) -> sp.Expr:
    """Representative of the functional defined by ``sym`` on normalized tomograms.

    A term carrying no power of ``X_k`` pairs with ``int w dX_k = 1`` for
    every angle, so only its mean over ``theta_k`` matters; those
    coefficients are replaced by their angular means.
    """
    expr = sp.expand(sp.expand_trig(sp.expand(sym.expr, power_exp=True)))
    for k in sym.modes:
        xs, th = x_symbol(k), theta_symbol(k)
        poly = sp.Poly(expr, xs)
        out = sp.Integer(0)
        for (power,), coef in poly.terms():
            if power == 0:
                coef = sp.integrate(coef, (th, 0, sp.pi)) / sp.pi
            out += coef * xs**power
        expr = sp.expand(out)
    return sp.simplify(expr)


def same_symbol(a: RegularDualSymbol, b: RegularDualSymbol) -> bool:
    """True when the two symbols define the same functional on normalized tomograms."""
    modes = tuple(sorted(set(a.modes) | set(b.modes)))
    diff = RegularDualSymbol(sp.expand(a.expr - b.expr), "diff", modes)
    return sp.simplify(canonical(diff)) == 0


@dataclass(frozen=True)
class RegularizationRule:
    """``lhs`` under the X and theta integrals equals the weight ``rhs``.

    ``parity`` restricts the X test weights for which the identity holds
    (``None``: any weight, the rule acts slice by slice).
    """

    label: str
    lhs: TomogramOperator
    rhs: sp.Expr
    parity: str | None = None


def regularization_table(mode: int = 0) -> list:
    """Rewrite rules used to turn operator forms into regular dual symbols."""
    Xs, th = x_symbol(mode), theta_symbol(mode)
    s = lambda f: C(f, mode)  # noqa: E731
    Dt = DT(mode)
    rules = [
        ("dX", DX(mode), sp.Integer(0), None),
        ("X dX", X(mode) @ DX(mode), sp.Integer(-1), None),
        ("J", JX(mode), -Xs, None),
        ("X J", X(mode) @ JX(mode), -(Xs**2) / 2, None),
        ("J^2", JX(mode, 2), Xs**2 / 2, None),
        ("dtheta^2", Dt @ Dt, sp.Integer(0), "even"),
        ("sin dtheta", s(sp.sin) @ Dt, -sp.cos(th), "odd"),
        ("sin^2 dtheta", s(lambda t: sp.sin(t) ** 2) @ Dt, -sp.sin(2 * th), "even"),
        ("sin2/2 dtheta", s(lambda t: sp.sin(2 * t) / 2) @ Dt, -sp.cos(2 * th), "even"),
        ("sin^2 dtheta^2", s(lambda t: sp.sin(t) ** 2) @ Dt @ Dt, 2 * sp.cos(2 * th), "even"),
        ("sin2/2 dtheta^2", s(lambda t: sp.sin(2 * t) / 2) @ Dt @ Dt, -2 * sp.sin(2 * th), "even"),
        ("cos dtheta", s(sp.cos) @ Dt, sp.sin(th), "odd"),
    ]
    return [RegularizationRule(lbl, op, sp.sympify(r), par) for lbl, op, r, par in rules]


def rule_residual(rule: RegularizationRule, w: OpticalTomogram, theta_method: str = "fd4") -> float:
    """Largest violation of ``rule`` on ``w``.

    Rules without parity are compared slice by slice; parity rules are
    integrated over theta against X (odd) or 1 and X^2 (even).
    """
    lhs = rule.lhs.apply(w, theta_method=theta_method)
    fn = sp.lambdify([x_symbol(0), theta_symbol(0)], rule.rhs.subs(
        {x_symbol(k): x_symbol(0) for k in rule.lhs.mode_indices} |
        {theta_symbol(k): theta_symbol(0) for k in rule.lhs.mode_indices}), "numpy")
    rhs = np.broadcast_to(np.asarray(fn(w.xgrid.points[None, :], w.angles[:, None]), dtype=complex), w.w.shape) * w.w
    if rule.parity is None:
        return float(np.max(np.abs(integrate_fp(lhs, w.xgrid, axis=1) - integrate(rhs, w.xgrid, axis=1))))
    x = w.xgrid.points
    out = 0.0
    for b in ((1,) if rule.parity == "odd" else (0, 2)):
        a = theta_integrate(integrate_fp(lhs * x**b, w.xgrid, axis=1), w.agrid)
        c = theta_integrate(integrate(rhs * x**b, w.xgrid, axis=1), w.agrid)
        out = max(out, abs(a - c))
    return float(out)


__all__ = [
    "OperatorMatrix",
    "operator_matrix",
    "matrix_expectation",
    "symbol_of",
    "RegularDualSymbol",
    "SingularDualSymbol",
    "REGULAR_NAMES",
    "dual_regular",
    "dual_singular",
    "slice_at",
    "expect",
    "dual_of_product",
    "regularize_term",
    "derive_dual",
    "canonical",
    "same_symbol",
    "RegularizationRule",
    "regularization_table",
    "rule_residual",
]
