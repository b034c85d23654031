"""Optical tomograms: forward maps from states and the inverse by filtered backprojection.

The tomogram is the probability density of the rotated quadrature
``X = q cos(theta) + (p/(m*omega)) sin(theta)``::

    w(X, theta) = <X, theta| rho |X, theta>
                = (1/2pi) int W(q, p) delta(X - q cos(theta) - p sin(theta)) dq dp

and it obeys ``w(X, theta + pi) = w(-X, theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.ndimage import map_coordinates, spline_filter
from scipy.signal import czt

from .errors import DimensionError, GridMismatchError, InvariantError
from .numgrid import DEFAULT_ANGLES, AngleGrid, FilterSpec, Grid1D, integrate, reflect_x
from .phasespace import WignerFunction, density_from_wigner
from .states import UNIT, DensityMatrix, ModeParams

NEGATIVE_TOL = 1e-9
KERNEL_MIN_SIN = 0.05


@dataclass(frozen=True, eq=False)
class OpticalTomogram:
    agrid: AngleGrid
    xgrid: Grid1D
    w: np.ndarray  # shape (n_theta, n_x)

    def __post_init__(self):
        if self.w.shape != (self.agrid.n_theta, self.xgrid.n):
            raise DimensionError(
                f"tomogram array has shape {self.w.shape}, expected {(self.agrid.n_theta, self.xgrid.n)}"
            )

    @property
    def angles(self) -> np.ndarray:
        return self.agrid.angles

    def slice_norms(self) -> np.ndarray:
        return integrate(self.w, self.xgrid, axis=1)

    @property
    def min_value(self) -> float:
        return float(np.min(self.w))

    def symmetry_residual(self) -> float:
        """Mismatch at theta -> pi between the data and the reflected theta = 0 slice.

        The slice at pi is extrapolated from the last four slices with the
        cubic Lagrange formula and compared against ``w(-X, 0)``.
        """
        w = self.w
        extrap = 4 * w[-1] - 6 * w[-2] + 4 * w[-3] - w[-4]
        return float(np.max(np.abs(extrap - reflect_x(w[0], self.xgrid))))

    def check_invariants(self, norm_tol: float = 1e-6, symmetry_tol: float | None = None):
        if self.min_value < -NEGATIVE_TOL:
            raise InvariantError(f"tomogram has negative values down to {self.min_value:.2e}")
        dev = np.max(np.abs(self.slice_norms() - 1.0))
        if dev > norm_tol:
            raise InvariantError(f"tomogram slices are not normalized (max deviation {dev:.2e})")
        if symmetry_tol is not None:
            res = self.symmetry_residual()
            if res > symmetry_tol * np.max(np.abs(self.w)):
                raise InvariantError(f"tomogram is not consistent with its theta + pi extension ({res:.2e})")
        return self


@dataclass(frozen=True, eq=False)
class MultimodeTomogram:
    """Product-state tomogram stored as one factor per mode.

    ``joint`` optionally holds the full array over
    ``(theta_1, ..., theta_n, X_1, ..., X_n)`` for n <= 2 modes; states that
    are not products can only be described that way.
    """

    modes: tuple
    joint: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("a multimode tomogram needs at least one mode")
        if self.joint is not None:
            if len(self.modes) > 2:
                raise ValueError("joint arrays are supported for at most two modes")
            shape = tuple(m.agrid.n_theta for m in self.modes) + tuple(m.xgrid.n for m in self.modes)
            if self.joint.shape != shape:
                raise DimensionError(f"joint array has shape {self.joint.shape}, expected {shape}")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @classmethod
    def product(cls, *tomograms: OpticalTomogram, with_joint: bool = False) -> "MultimodeTomogram":
        joint = None
        if with_joint:
            if len(tomograms) != 2:
                raise ValueError("with_joint needs exactly two modes")
            a, b = tomograms
            joint = np.einsum("ix,jy->ijxy", a.w, b.w)
        return cls(tuple(tomograms), joint)

    def check_invariants(self, norm_tol: float = 1e-6):
        for m in self.modes:
            m.check_invariants(norm_tol)
        if self.joint is not None:
            a, b = self.modes
            tot = integrate(integrate(self.joint, b.xgrid, axis=3), a.xgrid, axis=2)
            dev = np.max(np.abs(tot - 1.0))
            if dev > norm_tol:
                raise InvariantError(f"joint tomogram is not normalized (max deviation {dev:.2e})")
        return self


# ---------------------------------------------------------------- forward maps


def kernel_threshold(qgrid: Grid1D, xgrid: Grid1D, params: ModeParams = UNIT) -> float:
    """Smallest |sin(theta)| at which the quadrature eigenfunction is resolved.

    The local wavenumber of ``<q|X,theta>`` is ``(X - q cos)/(h sin)``; it
    must stay below the Nyquist limit ``pi/dq`` over the whole grid.
    """
    reach = max(abs(xgrid.x_min), abs(xgrid.x_max)) + max(abs(qgrid.x_min), abs(qgrid.x_max))
    return max(KERNEL_MIN_SIN, reach * qgrid.dx / (np.pi * params.length2))


def quadrature_kernel(theta: float, xgrid: Grid1D, qgrid: Grid1D, params: ModeParams = UNIT) -> np.ndarray:
    """``K[i, j] = <q_j | X_i, theta>`` for sin(theta) != 0."""
    h = params.length2
    s, c = np.sin(theta), np.cos(theta)
    X = xgrid.points[:, None]
    q = qgrid.points[None, :]
    return np.exp(1j * (X * q - 0.5 * q * q * c) / (h * s)) / np.sqrt(2 * np.pi * h * abs(s))


@lru_cache(maxsize=8)
def _oscillator_basis(qgrid: Grid1D, h: float):
    """Eigenpairs of the grid oscillator (q^2 - h^2 d^2/dq^2)/(2h) with a spectral Laplacian."""
    n = qgrid.n
    k = qgrid.wavenumbers
    F = np.fft.fft(np.eye(n), axis=0)
    D2 = np.real(np.fft.ifft((-(k**2))[:, None] * F, axis=0))
    D2 = 0.5 * (D2 + D2.T)
    H = (np.diag(qgrid.points**2) - h * h * D2) / (2 * h)
    E, V = np.linalg.eigh(H)
    E.flags.writeable = False
    V.flags.writeable = False
    return E, V


def rotation(theta: float, qgrid: Grid1D, params: ModeParams = UNIT) -> np.ndarray:
    """Unitary ``exp(-i theta H)`` on the grid; maps psi(q) to <X = q_j, theta|psi>."""
    E, V = _oscillator_basis(qgrid, params.length2)
    return (V * np.exp(-1j * theta * E)) @ V.conj().T


def rotate(vec: np.ndarray, theta: float, qgrid: Grid1D, params: ModeParams = UNIT) -> np.ndarray:
    """``rotation(theta) @ vec`` without forming the matrix."""
    E, V = _oscillator_basis(qgrid, params.length2)
    phase = np.exp(-1j * theta * E)
    return V @ (phase[:, None] * (V.conj().T @ vec))


def kernel_project(vec: np.ndarray, theta: float, xgrid: Grid1D, qgrid: Grid1D,
                   params: ModeParams = UNIT) -> np.ndarray:
    """``quadrature_kernel(theta).conj() @ vec * dq`` by a chirp-z transform.

    ``conj<q_j|X_i>`` splits into a chirp in q times ``exp(-i a X_i q_j)``
    with ``a = 1/(h sin)``, a DFT at scaled frequencies on uniform grids.
    ``vec`` is one vector or a matrix of column vectors.
    """
    vec = np.asarray(vec)
    if vec.ndim == 1:
        return kernel_project(vec[:, None], theta, xgrid, qgrid, params)[:, 0]
    h = params.length2
    s, c = np.sin(theta), np.cos(theta)
    a = 1.0 / (h * s)
    q = qgrid.points
    dq, dX = qgrid.dx, xgrid.dx
    x0, q0 = xgrid.x_min, qgrid.x_min
    v = vec * np.exp(0.5j * a * c * q * q)[:, None] * np.exp(-1j * a * x0 * q)[:, None]
    out = czt(v, m=xgrid.n, w=np.exp(-1j * a * dX * dq), a=1.0, axis=0)
    out *= np.exp(-1j * a * q0 * dX * np.arange(xgrid.n))[:, None]
    return out * dq / np.sqrt(2 * np.pi * h * abs(s))


def _low_rank(rho: DensityMatrix, rel_cut: float = 1e-13):
    """``rho.matrix = sum_i lam_i v_i v_i^H`` with v_i orthonormal in the discrete sense."""
    m = rho.matrix
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    keep = np.abs(lam) > rel_cut * np.max(np.abs(lam))
    return lam[keep], vec[:, keep]


def _marginal_rotated(lam, vec, theta, rho_grid, xgrid, params):
    amp = rotate(vec, theta, rho_grid, params)  # samples of sqrt(dq) <X, theta|v_i>
    dens = (np.abs(amp) ** 2) @ lam / rho_grid.dx
    if xgrid == rho_grid:
        return dens
    return np.interp(xgrid.points, rho_grid.points, dens, left=0.0, right=0.0)


def tomogram_from_density(rho: DensityMatrix, agrid: AngleGrid = DEFAULT_ANGLES,
                          xgrid: Grid1D | None = None, params: ModeParams = UNIT,
                          sin_threshold: float | None = None) -> OpticalTomogram:
    """Tomogram ``w(X, theta) = <X, theta| rho |X, theta>``.

    Slices with ``|sin(theta)|`` at or above the threshold use the explicit
    quadrature eigenfunction; the rest rotate the state with the grid
    oscillator propagator and read the position marginal.  The default
    threshold comes from :func:`kernel_threshold`.
    """
    qgrid = rho.grid
    xgrid = xgrid or qgrid
    thr = kernel_threshold(qgrid, xgrid, params) if sin_threshold is None else sin_threshold
    lam, vec = _low_rank(rho)
    dq = qgrid.dx
    out = np.empty((agrid.n_theta, xgrid.n))
    for i, th in enumerate(agrid.angles):
        if i == 0 and xgrid == qgrid:
            out[i] = np.real(np.diag(rho.rho))
        elif abs(np.sin(th)) >= thr:
            amp = kernel_project(vec, th, xgrid, qgrid, params) / np.sqrt(dq)
            out[i] = (np.abs(amp) ** 2) @ lam
        else:
            out[i] = _marginal_rotated(lam, vec, th, qgrid, xgrid, params)
    return OpticalTomogram(agrid, xgrid, out)


def _line_samples(qgrid: Grid1D, pgrid: Grid1D, step: float):
    reach = np.hypot(max(abs(qgrid.x_min), abs(qgrid.x_max)), max(abs(pgrid.x_min), abs(pgrid.x_max)))
    dt = step * min(qgrid.dx, pgrid.dx)
    m = int(np.ceil(reach / dt))
    return dt * np.arange(-m, m + 1), dt


def tomogram_from_wigner(W: WignerFunction, agrid: AngleGrid = DEFAULT_ANGLES,
                         xgrid: Grid1D | None = None, line_step: float = 3.0) -> OpticalTomogram:
    """Radon transform of W divided by 2 pi.

    Each line ``q cos + p sin = X`` is sampled every ``line_step`` times the
    finer grid spacing, W is evaluated there by cubic-spline interpolation
    and the samples are summed with the trapezoid rule (W is zero outside
    its grid, so the end corrections vanish).
    """
    xgrid = xgrid or W.qgrid
    coeffs = spline_filter(W.w, order=3, mode="constant")
    t, dt = _line_samples(W.qgrid, W.pgrid, line_step)
    X = xgrid.points
    out = np.empty((agrid.n_theta, xgrid.n))
    for i, th in enumerate(agrid.angles):
        c, s = np.cos(th), np.sin(th)
        q = X[:, None] * c - t[None, :] * s
        p = X[:, None] * s + t[None, :] * c
        iq = (q - W.qgrid.x_min) / W.qgrid.dx
        ip = (p - W.pgrid.x_min) / W.pgrid.dx
        vals = map_coordinates(coeffs, [iq.ravel(), ip.ravel()], order=3, mode="constant",
                               cval=0.0, prefilter=False).reshape(q.shape)
        out[i] = vals.sum(axis=1) * dt
    return OpticalTomogram(agrid, xgrid, out / (2 * np.pi))


# ---------------------------------------------------------------- inverse maps


def _ramp_profile(y: np.ndarray, K: float) -> np.ndarray:
    """``int_0^K eta cos(eta y) d eta``."""
    y = np.asarray(y, dtype=float)
    out = np.full(y.shape, 0.5 * K * K)
    nz = np.abs(y) * K > 1e-4
    yy = y[nz]
    out[nz] = K * np.sin(K * yy) / yy + (np.cos(K * yy) - 1.0) / (yy * yy)
    small = ~nz
    ys = y[small]
    # Taylor series near y = 0
    out[small] = 0.5 * K * K - K**4 * ys * ys / 8.0
    return out


def ramp_kernel(y: np.ndarray, K: float, cutoff_fraction: float = 1.0) -> np.ndarray:
    """Real-space ramp filter ``(1/2pi) int_{|eta| < K} |eta| window(eta) e^{i eta y} d eta``.

    With ``cutoff_fraction`` < 1 the ramp is multiplied by
    ``cos(pi eta / (2 Kc))`` on ``|eta| < Kc = cutoff_fraction * K``.
    """
    if cutoff_fraction >= 1.0:
        return _ramp_profile(y, K) / np.pi
    Kc = cutoff_fraction * K
    a = np.pi / (2 * Kc)
    return 0.5 * (_ramp_profile(y + a, Kc) + _ramp_profile(y - a, Kc)) / np.pi


def filtered_projections(w: OpticalTomogram, reach: float, filt: FilterSpec = FilterSpec(),
                         oversample: int = 4):
    """``g(s, theta) = int |eta| w~(eta, theta) e^{-i eta s} d eta`` on a fine s-grid.

    Returns ``(s, g)`` with ``g`` of shape ``(n_theta, len(s))``; ``s``
    covers ``[-reach, reach]`` with spacing ``dX/oversample``.
    """
    xg = w.xgrid
    K = np.pi / xg.dx
    ds = xg.dx / oversample
    m = int(np.ceil(reach / ds)) + 2
    s = ds * np.arange(-m, m + 1)
    wts = np.full(xg.n, xg.dx)
    wts[[0, -1]] *= 0.5
    H = ramp_kernel(s[:, None] - xg.points[None, :], K, filt.k_cutoff_fraction) * wts[None, :]
    return s, 2 * np.pi * (w.w @ H.T)


def wigner_from_tomogram(w: OpticalTomogram, qgrid: Grid1D | None = None,
                         pgrid: Grid1D | None = None,
                         filt: FilterSpec = FilterSpec()) -> WignerFunction:
    """Filtered backprojection.

    ``W(q, p) = (1/2pi) (pi/n_theta) sum_theta g(q cos + p sin, theta)``,
    with ``g`` the ramp-filtered projection evaluated by linear
    interpolation from a 4x oversampled grid.
    """
    qgrid = qgrid or w.xgrid
    pgrid = pgrid or w.xgrid
    reach = np.hypot(max(abs(qgrid.x_min), abs(qgrid.x_max)), max(abs(pgrid.x_min), abs(pgrid.x_max)))
    s, g = filtered_projections(w, reach, filt)
    q = qgrid.points[:, None]
    p = pgrid.points[None, :]
    acc = np.zeros((qgrid.n, pgrid.n))
    s0, ds = s[0], s[1] - s[0]
    for i, th in enumerate(w.angles):
        u = (q * np.cos(th) + p * np.sin(th) - s0) / ds
        j = np.clip(np.floor(u).astype(np.int64), 0, s.size - 2)
        f = u - j
        gi = g[i]
        acc += (1.0 - f) * gi[j] + f * gi[j + 1]
    return WignerFunction(qgrid, pgrid, acc / (2 * w.agrid.n_theta))


def density_from_tomogram(w: OpticalTomogram, grid: Grid1D | None = None,
                          filt: FilterSpec = FilterSpec()) -> DensityMatrix:
    """Density matrix from a tomogram through the Wigner function.

    W is backprojected directly onto the half lattice of ``grid`` so the
    anti-diagonal integrals need no interpolation.
    """
    grid = grid or w.xgrid
    W = wigner_from_tomogram(w, grid.half_lattice(), grid, filt)
    return density_from_wigner(W, grid)


def symmetry_extend(w: OpticalTomogram, k: int) -> np.ndarray:
    """Values on ``theta + k*pi`` for the stored angles: ``w((-1)^k X, theta)``."""
    if int(k) != k:
        raise ValueError("k must be an integer")
    if k % 2 == 0:
        return w.w.copy()
    return reflect_x(w.w, w.xgrid, axis=1)


def same_grids(a: OpticalTomogram, b: OpticalTomogram) -> None:
    if a.agrid != b.agrid or a.xgrid != b.xgrid:
        raise GridMismatchError("tomograms live on different grids")


__all__ = [
    "OpticalTomogram",
    "MultimodeTomogram",
    "kernel_threshold",
    "quadrature_kernel",
    "rotation",
    "rotate",
    "kernel_project",
    "tomogram_from_density",
    "tomogram_from_wigner",
    "ramp_kernel",
    "filtered_projections",
    "wigner_from_tomogram",
    "density_from_tomogram",
    "symmetry_extend",
    "same_grids",
]
