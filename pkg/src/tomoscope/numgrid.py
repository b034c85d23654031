"""Uniform grids, quadrature and spectral derivative machinery.

Everything here is a pure function of its array arguments. Arrays carry the
X (or q, p) coordinate on the last axis unless an ``axis`` argument says
otherwise; tomogram-shaped arrays are ``(n_theta, n_x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import erf

from .errors import DimensionError, ZeroModeError

ZERO_MODE_POLICIES = ("set-zero", "reject-above-tol")


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_j = x_min + j*dx`` with both endpoints included."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"Grid1D needs an integer n >= 16, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("Grid1D needs x_max > x_min")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.x_min + self.dx * np.arange(self.n)
        pts[-1] = self.x_max
        pts.flags.writeable = False
        return pts

    @property
    def period(self) -> float:
        """Length of the periodic box seen by the discrete Fourier transform."""
        return self.n * self.dx

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.flags.writeable = False
        return k

    @property
    def is_symmetric(self) -> bool:
        return math.isclose(self.x_min, -self.x_max, rel_tol=0.0, abs_tol=1e-12 * self.x_max)

    def half_lattice(self) -> "Grid1D":
        """Grid with the same endpoints and half the spacing (2n-1 points)."""
        return Grid1D(self.x_min, self.x_max, 2 * self.n - 1)

    def is_half_lattice_of(self, other: "Grid1D") -> bool:
        return self.n == 2 * other.n - 1 and self.x_min == other.x_min and self.x_max == other.x_max


@dataclass(frozen=True)
class AngleGrid:
    """Half-open angle grid ``theta_k = k*pi/n_theta``; theta = pi is excluded."""

    n_theta: int

    def __post_init__(self):
        if int(self.n_theta) != self.n_theta or self.n_theta < 4:
            raise ValueError(f"AngleGrid needs an integer n_theta >= 4, got {self.n_theta}")
        object.__setattr__(self, "n_theta", int(self.n_theta))

    @property
    def dtheta(self) -> float:
        return np.pi / self.n_theta

    @cached_property
    def angles(self) -> np.ndarray:
        th = self.dtheta * np.arange(self.n_theta)
        th.flags.writeable = False
        return th


@dataclass(frozen=True)
class FilterSpec:
    """Ramp filter used by filtered backprojection.

    ``k_cutoff_fraction`` < 1 multiplies the ramp by a cosine window that
    reaches zero at that fraction of the Nyquist wavenumber.
    """

    kind: str = "abs-eta-ramp"
    k_cutoff_fraction: float = 1.0
    zero_mode_policy: str = "set-zero"
    tol: float = 1e-6

    def __post_init__(self):
        if self.kind != "abs-eta-ramp":
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not 0.0 < self.k_cutoff_fraction <= 1.0:
            raise ValueError("k_cutoff_fraction must lie in (0, 1]")
        if self.zero_mode_policy not in ZERO_MODE_POLICIES:
            raise ValueError(f"zero_mode_policy must be one of {ZERO_MODE_POLICIES}")


DEFAULT_GRID = Grid1D(-8.0, 8.0, 512)
DEFAULT_ANGLES = AngleGrid(180)


def _check_axis(f: np.ndarray, grid: Grid1D, axis: int) -> None:
    if f.ndim == 0 or f.shape[axis] != grid.n:
        raise DimensionError(
            f"array has {f.shape[axis] if f.ndim else 0} samples along axis {axis}, grid has {grid.n}"
        )


def _broadcast_along(v: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = v.size
    return v.reshape(shape)


def integrate(f, grid: Grid1D, axis: int = -1):
    """Composite trapezoid rule along ``axis``."""
    f = np.asarray(f)
    _check_axis(f, grid, axis)
    return trapezoid(f, dx=grid.dx, axis=axis)


def _real_if_input_real(result: np.ndarray, f: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(f):
        return result
    scale = np.max(np.abs(f)) if f.size else 0.0
    residue = np.max(np.abs(result.imag)) if result.size else 0.0
    if residue > 1e-10 * max(scale, 1e-300) and residue > 1e-14:
        raise ArithmeticError(f"imaginary residue {residue:.2e} from a real input")
    return result.real


def _fourier_multiply(f: np.ndarray, grid: Grid1D, mult: np.ndarray, axis: int) -> np.ndarray:
    spec = np.fft.fft(f, axis=axis)
    spec *= _broadcast_along(mult, f.ndim, axis)
    return _real_if_input_real(np.fft.ifft(spec, axis=axis), f)


def deriv_x(f, grid: Grid1D, order: int = 1, axis: int = -1) -> np.ndarray:
    """Spectral derivative of order 1 or 2 along ``axis``.

    Accurate when ``f`` has decayed to ~0 at both grid edges; the periodic
    extension otherwise introduces Gibbs ringing.
    """
    f = np.asarray(f)
    _check_axis(f, grid, axis)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    k = grid.wavenumbers
    mult = (1j * k) ** order
    if order % 2 and grid.n % 2 == 0:
        mult[grid.n // 2] = 0.0
    return _fourier_multiply(f, grid, mult, axis)


def antideriv_x(
    f,
    grid: Grid1D,
    power: int = 1,
    policy: str = "set-zero",
    tol: float = 1e-6,
    axis: int = -1,
) -> np.ndarray:
    """Periodic Fourier antiderivative: multiplier ``(ik)**-power`` mode by mode.

    The k = 0 mode is dropped (``set-zero``) or, with ``reject-above-tol``,
    the call fails unless ``|integral f| <= tol * ||f||_1``.  The result
    satisfies ``deriv_x(antideriv_x(f)) == f - mean(f)`` where the mean is
    taken over the periodic box.
    """
    f = np.asarray(f)
    _check_axis(f, grid, axis)
    if power < 1:
        raise ValueError("power must be a positive integer")
    if policy not in ZERO_MODE_POLICIES:
        raise ValueError(f"unknown zero-mode policy {policy!r}")
    if policy == "reject-above-tol":
        total = integrate(f, grid, axis=axis)
        norm1 = integrate(np.abs(f), grid, axis=axis)
        bad = np.abs(total) > tol * np.maximum(norm1, 1e-300)
        if np.any(bad):
            worst = np.max(np.abs(np.atleast_1d(total)[np.atleast_1d(bad)]))
            raise ZeroModeError(float(worst), tol)
    k = grid.wavenumbers.astype(complex)
    mult = np.zeros_like(k)
    nz = k != 0
    mult[nz] = (1j * k[nz]) ** (-power)
    if power % 2 and grid.n % 2 == 0:
        mult[grid.n // 2] = 0.0
    return _fourier_multiply(f, grid, mult, axis)


# Reference profile used to split off the k = 0 content in inverse_dx.
def _reference(grid: Grid1D):
    c = 0.5 * (grid.x_min + grid.x_max)
    s = (grid.x_max - grid.x_min) / 16.0
    y = (grid.points - c) / s
    g = np.exp(-y * y) / (s * np.sqrt(np.pi))
    g1 = 0.5 * erf(y)
    g2 = 0.5 * ((grid.points - c) * erf(y) + s / np.sqrt(np.pi) * np.exp(-y * y))
    return g, g1, g2


def _moveaxis_last(f: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(f, axis, -1)


def _decaying_antideriv(h: np.ndarray, grid: Grid1D) -> np.ndarray:
    # h has zero integral along the last axis: antiderivative vanishing at both ends.
    H = antideriv_x(h, grid, 1, axis=-1)
    return H - H[..., :1]


def inverse_dx(f, grid: Grid1D, power: int = 1, axis: int = -1) -> np.ndarray:
    """Inverse X-derivative on the whole line, ``power`` in {1, 2}.

    Realizes the plane-wave definition ``e^{ikX} -> e^{ikX}/(ik)`` as the
    principal-value multiplier, i.e. convolution with ``sign(X)/2``; its
    square (finite part of ``-1/k^2``) is convolution with ``|X|/2``.
    ``f`` must decay at the grid edges.  Unlike :func:`antideriv_x` the
    result keeps the step (power 1) or ramp (power 2) carried by the zero
    mode, so ``inverse_dx(f)`` tends to ``+-integral(f)/2`` outside the
    support of ``f``.
    """
    f = np.asarray(f)
    _check_axis(f, grid, axis)
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    g, g1, g2 = _reference(grid)
    fl = _moveaxis_last(f, axis)
    m0 = trapezoid(fl, dx=grid.dx, axis=-1)[..., None]
    H = _decaying_antideriv(fl - m0 * g, grid)
    if power == 1:
        out = m0 * g1 + H
    else:
        m1 = trapezoid(H, dx=grid.dx, axis=-1)[..., None]
        H2 = _decaying_antideriv(H - m1 * g, grid)
        out = m0 * g2 + m1 * g1 + H2
    return np.moveaxis(out, -1, axis)


def integrate_fp(f, grid: Grid1D, axis: int = -1, tail: int = 8):
    """Hadamard finite part of the integral of ``f`` over the real line.

    ``f`` may grow linearly outside the support of the data (as the outputs
    of :func:`inverse_dx` do); the affine asymptote on each side is fitted
    on the last ``tail`` samples and its divergent contribution, measured
    from X = 0, is discarded, together with the trapezoid endpoint error
    of the asymptotes.  For decaying ``f`` this equals :func:`integrate`.
    """
    f = np.asarray(f)
    _check_axis(f, grid, axis)
    fl = _moveaxis_last(f, axis)
    x = grid.points
    total = trapezoid(fl, dx=grid.dx, axis=-1)

    def fit(xs, ys):
        xm = xs.mean()
        dxs = xs - xm
        a = (ys * dxs).sum(axis=-1) / (dxs * dxs).sum()
        b = ys.mean(axis=-1) - a * xm
        return a, b

    a_r, b_r = fit(x[-tail:], fl[..., -tail:])
    a_l, b_l = fit(x[:tail], fl[..., :tail])
    right = a_r * grid.x_max**2 / 2 + b_r * grid.x_max
    left = -(a_l * grid.x_min**2 / 2 + b_l * grid.x_min)
    # trapezoid endpoint error h^2/12 (f'(b) - f'(a)) no longer vanishes for growing f
    endpoint = grid.dx**2 / 12 * (a_r - a_l)
    return total - right - left - endpoint


def reflect_x(f, grid: Grid1D, axis: int = -1) -> np.ndarray:
    """Values at -X.  Exact index reversal on symmetric grids, else linear interpolation."""
    f = np.asarray(f)
    _check_axis(f, grid, axis)
    if grid.is_symmetric:
        return np.flip(f, axis=axis)
    fl = _moveaxis_last(f, axis)
    x = grid.points
    flat = fl.reshape(-1, grid.n)

    def interp(row):
        return np.interp(-x, x, row, left=0.0, right=0.0)

    if np.iscomplexobj(flat):
        out = np.array([interp(r.real) + 1j * interp(r.imag) for r in flat])
    else:
        out = np.array([interp(r) for r in flat])
    return np.moveaxis(out.reshape(fl.shape), -1, axis)


def extend_theta(w, xgrid: Grid1D, ghost: int, theta_axis: int = 0, x_axis: int = -1) -> np.ndarray:
    """Pad the theta axis with ``ghost`` slices on each side using w(X, theta+pi) = w(-X, theta)."""
    w = np.asarray(w)
    n = w.shape[theta_axis]
    head = np.take(w, range(n - ghost, n), axis=theta_axis)
    tail = np.take(w, range(ghost), axis=theta_axis)
    head = reflect_x(head, xgrid, axis=x_axis)
    tail = reflect_x(tail, xgrid, axis=x_axis)
    return np.concatenate([head, w, tail], axis=theta_axis)


_FD4 = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
}


def deriv_theta(
    w,
    agrid: AngleGrid,
    xgrid: Grid1D,
    order: int = 1,
    theta_axis: int = 0,
    x_axis: int = -1,
    method: str = "fd4",
) -> np.ndarray:
    """Derivative along theta of a tomogram-shaped array.

    ``fd4`` uses fourth-order central differences with ghost slices from
    the symmetry extension; ``spectral`` differentiates the 2*pi-periodic
    sheet ``[w(X, theta), w(-X, theta)]`` by FFT.
    """
    w = np.asarray(w)
    if w.shape[theta_axis] != agrid.n_theta:
        raise DimensionError("theta axis length does not match the angle grid")
    _check_axis(w, xgrid, x_axis)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    theta_axis = theta_axis % w.ndim
    x_axis = x_axis % w.ndim
    h = agrid.dtheta
    if method == "fd4":
        ext = extend_theta(w, xgrid, 2, theta_axis, x_axis)
        n = agrid.n_theta
        coef = _FD4[order]
        out = sum(c * np.take(ext, range(j, j + n), axis=theta_axis) for j, c in enumerate(coef) if c)
        return out / h**order
    if method == "spectral":
        n = agrid.n_theta
        full = np.concatenate([w, reflect_x(w, xgrid, axis=x_axis)], axis=theta_axis)
        m = np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
        mult = (1j * m) ** order
        if order % 2:
            mult[n] = 0.0
        res = _fourier_multiply(full, None, mult, theta_axis)
        return np.take(res, range(n), axis=theta_axis)
    raise ValueError(f"unknown method {method!r}")


def theta_integrate(f, agrid: AngleGrid, axis: int = 0):
    """Rectangle rule over the half-open interval [0, pi)."""
    f = np.asarray(f)
    if f.shape[axis] != agrid.n_theta:
        raise DimensionError("theta axis length does not match the angle grid")
    return f.sum(axis=axis) * agrid.dtheta
