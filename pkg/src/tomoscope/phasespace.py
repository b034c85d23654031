"""Wigner transform pair between density matrices and Wigner functions.

Convention: ``W(q, p) = int rho(q + u/2, q - u/2) exp(-i p u) du`` so that
``int int W dq dp = 2*pi`` for a unit-trace state and ``|W| <= 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvariantError, ResolutionError
from .numgrid import Grid1D, integrate
from .states import DensityMatrix


@dataclass(frozen=True, eq=False)
class WignerFunction:
    qgrid: Grid1D
    pgrid: Grid1D
    w: np.ndarray  # shape (qgrid.n, pgrid.n)

    def __post_init__(self):
        if self.w.shape != (self.qgrid.n, self.pgrid.n):
            raise ValueError("Wigner array must have shape (n_q, n_p)")

    def norm(self) -> float:
        return float(integrate(integrate(self.w, self.pgrid, axis=1), self.qgrid))

    def check_invariants(self, norm_tol: float = 1e-6, pure: bool = False):
        nrm = self.norm()
        if abs(nrm - 2 * np.pi) > norm_tol * 2 * np.pi:
            raise InvariantError(f"Wigner normalization {nrm:.8f} differs from 2*pi")
        if pure and np.max(np.abs(self.w)) > 2 + 1e-6:
            raise InvariantError("pure-state Wigner function exceeds the bound |W| <= 2")
        return self


def _antidiagonal_stack(rho: np.ndarray) -> np.ndarray:
    """``G[s, d + n - 1] = rho[a, b]`` with ``a + b = s`` and ``a - b = d`` (zero if absent)."""
    n = rho.shape[0]
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    G = np.zeros((2 * n - 1, 2 * n - 1), dtype=complex)
    G[a + b, a - b + n - 1] = rho
    return G


def _wigner_half_lattice(rho: DensityMatrix, pgrid: Grid1D) -> np.ndarray:
    """W at every half-lattice point ``c_s = q_min + s*dq/2``; no interpolation needed."""
    grid = rho.grid
    n = grid.n
    dq = grid.dx
    nyquist = np.pi / (2 * dq)
    if max(abs(pgrid.x_min), abs(pgrid.x_max)) > nyquist * (1 + 1e-12):
        raise ResolutionError(f"p-grid exceeds the resolvable band |p| <= {nyquist:.3f}")
    G = _antidiagonal_stack(rho.rho)
    d = np.arange(-(n - 1), n)
    # consecutive entries on one anti-diagonal are 2*dq apart in u
    phase = np.exp(-1j * np.outer(d * dq, pgrid.points))
    return 2 * dq * np.real(G @ phase)


def wigner_from_density(rho: DensityMatrix, pgrid: Grid1D | None = None,
                        qgrid: Grid1D | None = None) -> WignerFunction:
    """Wigner function of ``rho``.

    The q-grid defaults to ``rho.grid``.  When it coincides with the density
    grid or its half lattice the anti-diagonals are sampled exactly; other
    q-grids are filled by cubic interpolation along q of the half-lattice
    values.
    """
    grid = rho.grid
    pgrid = pgrid or grid
    qgrid = qgrid or grid
    full = _wigner_half_lattice(rho, pgrid)
    if qgrid == grid:
        w = full[::2]
    elif qgrid.is_half_lattice_of(grid):
        w = full
    else:
        centers = grid.half_lattice().points
        if qgrid.x_min < centers[0] or qgrid.x_max > centers[-1]:
            raise ResolutionError("q-grid extends beyond the density grid")
        w = CubicSpline(centers, full, axis=0)(qgrid.points)
    return WignerFunction(qgrid, pgrid, np.ascontiguousarray(w))


def _half_shift(f: np.ndarray, dx: float) -> np.ndarray:
    """Band-limited values at x + dx/2 along axis 0."""
    n = f.shape[0]
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    mult = np.exp(0.5j * k * dx)
    if n % 2 == 0:
        mult[n // 2] = np.cos(0.5 * k[n // 2] * dx)
    return np.real(np.fft.ifft(np.fft.fft(f, axis=0) * mult[:, None], axis=0))


def density_from_wigner(W: WignerFunction, grid: Grid1D | None = None,
                        norm_tol: float = 1e-4) -> DensityMatrix:
    """Density matrix ``rho(q, q') = (1/2pi) int W((q+q')/2, p) exp(ip(q-q')) dp``.

    ``grid`` defaults to ``W.qgrid``.  W is needed on the half lattice of
    ``grid``; it is used as is when ``W.qgrid`` is that half lattice, filled
    by a band-limited half-sample shift when ``W.qgrid == grid`` and by cubic
    interpolation otherwise.
    """
    grid = grid or W.qgrid
    nrm = W.norm()
    if abs(nrm - 2 * np.pi) > norm_tol * 2 * np.pi:
        raise InvariantError(f"Wigner normalization {nrm:.6f} differs from 2*pi")
    n = grid.n
    half = grid.half_lattice()
    if W.qgrid.is_half_lattice_of(grid):
        Wc = W.w
    elif W.qgrid == grid:
        Wc = np.empty((2 * n - 1, W.pgrid.n))
        Wc[::2] = W.w
        Wc[1::2] = _half_shift(W.w, grid.dx)[:-1]
    else:
        Wc = CubicSpline(W.qgrid.points, W.w, axis=0, extrapolate=False)(half.points)
        Wc = np.nan_to_num(Wc)
    p = W.pgrid.points
    wts = np.full(p.size, W.pgrid.dx)
    wts[[0, -1]] *= 0.5
    d = np.arange(-(n - 1), n)
    phase = np.exp(1j * np.outer(p, d * grid.dx)) * wts[:, None]
    F = (Wc @ phase) / (2 * np.pi)
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rho = F[a + b, a - b + n - 1]
    dev = np.max(np.abs(rho - rho.conj().T))
    if dev > 1e-8 * max(1.0, np.max(np.abs(rho))):
        raise InvariantError(f"reconstructed density matrix not Hermitian (deviation {dev:.2e})")
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(grid, rho)


def parity_deviation(W: WignerFunction) -> float:
    """max |W(q, p) - W(-q, -p)| on symmetric grids."""
    return float(np.max(np.abs(W.w - W.w[::-1, ::-1])))


__all__ = [
    "WignerFunction",
    "wigner_from_density",
    "density_from_wigner",
    "parity_deviation",
]
