"""Reference quantum states on a coordinate grid.

Units default to hbar = m = omega = 1.  With non-unit :class:`ModeParams`
the states are scaled to the oscillator length ``sqrt(hbar/(m*omega))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, InvariantError, ResolutionError
from .numgrid import Grid1D, integrate

BOUNDARY_TAIL = 1e-6


@dataclass(frozen=True)
class ModeParams:
    hbar: float = 1.0
    mass: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"ModeParams.{name} must be strictly positive")

    @property
    def m_omega(self) -> float:
        return self.mass * self.omega0

    @property
    def length2(self) -> float:
        """Squared oscillator length hbar/(m*omega); the effective hbar of (q, p/(m*omega))."""
        return self.hbar / self.m_omega


UNIT = ModeParams()


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid1D
    psi: np.ndarray

    def norm2(self) -> float:
        return float(integrate(np.abs(self.psi) ** 2, self.grid))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.psi / np.sqrt(self.norm2()))

    def overlap(self, other: "WaveFunction") -> complex:
        """<self|other>."""
        _same_grid(self.grid, other.grid)
        return complex(integrate(np.conj(self.psi) * other.psi, self.grid))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Kernel values ``rho[j, k] = rho(q_j, q_k)`` on ``grid``."""

    grid: Grid1D
    rho: np.ndarray

    def __post_init__(self):
        if self.rho.shape != (self.grid.n, self.grid.n):
            raise ValueError("rho must be an n x n array on the grid")

    @property
    def matrix(self) -> np.ndarray:
        """Operator matrix acting on sampled wavefunctions (kernel times dq)."""
        return self.rho * self.grid.dx

    def trace(self) -> complex:
        return complex(integrate(np.diag(self.rho), self.grid))

    def purity(self) -> float:
        m = self.matrix
        return float(np.real(np.trace(m @ m)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[::-1]

    def fidelity(self, psi: WaveFunction) -> float:
        """<psi|rho|psi> for a normalized pure reference state."""
        _same_grid(self.grid, psi.grid)
        dx = self.grid.dx
        return float(np.real(np.conj(psi.psi) @ self.rho @ psi.psi) * dx * dx)

    def check_invariants(self, trace_tol: float = 1e-8, herm_tol: float = 1e-12, psd_tol: float = 1e-8):
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm > herm_tol * max(1.0, np.max(np.abs(self.rho))):
            raise InvariantError(f"density matrix not Hermitian (deviation {herm:.2e})")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise InvariantError(f"density matrix trace {tr.real:.10f} differs from 1")
        lam_min = self.eigenvalues()[-1]
        if lam_min < -psd_tol:
            raise InvariantError(f"density matrix has negative eigenvalue {lam_min:.2e}")
        return self


def _same_grid(a: Grid1D, b: Grid1D) -> None:
    if a != b:
        raise GridMismatchError(f"grids differ: {a} vs {b}")


def _check_tail(wf: "WaveFunction", what: str) -> None:
    # probability carried by the outermost grid cells of the normalized state
    dens = np.abs(wf.psi) ** 2
    edge = max(dens[0], dens[-1]) * wf.grid.dx
    if edge > BOUNDARY_TAIL:
        raise ResolutionError(f"{what} does not decay inside the grid (boundary-cell probability {edge:.1e})")


def hermite_functions(nmax: int, x: np.ndarray) -> np.ndarray:
    """Rows 0..nmax of normalized Hermite functions at ``x`` (three-term recurrence)."""
    out = np.empty((nmax + 1, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for j in range(2, nmax + 1):
        out[j] = np.sqrt(2.0 / j) * x * out[j - 1] - np.sqrt((j - 1) / j) * out[j - 2]
    return out


def fock(n: int, grid: Grid1D, params: ModeParams = UNIT) -> WaveFunction:
    """Number state |n> as a normalized Hermite function."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    if n > 20:
        raise ResolutionError("fock states beyond n = 20 are not supported")
    ell = np.sqrt(params.length2)
    psi = hermite_functions(n, grid.points / ell)[n] / np.sqrt(ell)
    wf = WaveFunction(grid, psi.astype(complex)).normalized()
    _check_tail(wf, f"fock({n})")
    return wf


def coherent(alpha: complex, grid: Grid1D, params: ModeParams = UNIT) -> WaveFunction:
    """Coherent state with <q> + i<p> = sqrt(2)*alpha in oscillator units."""
    alpha = complex(alpha)
    ell = np.sqrt(params.length2)
    y = grid.points / ell
    a, b = alpha.real, alpha.imag
    center = np.sqrt(2) * a * ell
    if not grid.x_min < center < grid.x_max:
        raise ResolutionError(f"coherent({alpha}) is displaced to q = {center:.3f}, outside the grid")
    psi = np.pi**-0.25 * np.exp(-0.5 * (y - np.sqrt(2) * a) ** 2 + 1j * np.sqrt(2) * b * y - 1j * a * b)
    return WaveFunction(grid, psi / np.sqrt(ell)).normalized()


def density_from_pure(psi: WaveFunction) -> DensityMatrix:
    return DensityMatrix(psi.grid, np.outer(psi.psi, np.conj(psi.psi)))


def mix(terms) -> DensityMatrix:
    """Convex combination of ``(weight, DensityMatrix | WaveFunction)`` pairs."""
    terms = list(terms)
    if not terms:
        raise ValueError("mix needs at least one term")
    weights = np.array([float(wt) for wt, _ in terms])
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must be nonnegative and sum to 1, got {weights.sum()!r}")
    mats = [t if isinstance(t, DensityMatrix) else density_from_pure(t) for _, t in terms]
    grid = mats[0].grid
    for m in mats[1:]:
        _same_grid(grid, m.grid)
    rho = sum(wt * m.rho for wt, m in zip(weights, mats))
    return DensityMatrix(grid, rho)


def _thermal_weights(nbar: float, nmax: int) -> np.ndarray:
    r = nbar / (1.0 + nbar)
    p = r ** np.arange(nmax + 1)
    return p / p.sum()


def thermal(nbar: float, grid: Grid1D, nmax: int = 12) -> DensityMatrix:
    """Thermal state truncated to |n> with n <= nmax and renormalized."""
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    if nbar == 0:
        return density_from_pure(fock(0, grid))
    p = _thermal_weights(nbar, nmax)
    p[-1] += 1.0 - p.sum()
    return mix([(pk, fock(k, grid)) for k, pk in enumerate(p)])


def _thermal_moments(nbar: float, nmax: int = 12) -> dict:
    p = _thermal_weights(nbar, nmax)
    n_mean = float(np.arange(nmax + 1) @ p)
    return {"q": 0.0, "p": 0.0, "q2": n_mean + 0.5, "p2": n_mean + 0.5, "qp_sym": 0.0, "N": n_mean}


@dataclass(frozen=True, eq=False)
class CatalogueEntry:
    name: str
    rho: DensityMatrix
    pure: WaveFunction | None = None
    moments: dict = field(default_factory=dict)


def catalogue(grid: Grid1D) -> list[CatalogueEntry]:
    """Reference states used by the invariant suites.

    ``moments`` holds closed-form values of <q>, <p>, <q^2>, <p^2>,
    <(qp+pq)/2> and <N>.
    """
    entries = []
    for n in range(4):
        psi = fock(n, grid)
        mom = {"q": 0.0, "p": 0.0, "q2": n + 0.5, "p2": n + 0.5, "qp_sym": 0.0, "N": float(n)}
        entries.append(CatalogueEntry(f"fock:{n}", density_from_pure(psi), psi, mom))
    for alpha in (1.0, 1j, 0.6 - 0.8j):
        psi = coherent(alpha, grid)
        a = complex(alpha)
        q, p = np.sqrt(2) * a.real, np.sqrt(2) * a.imag
        mom = {"q": q, "p": p, "q2": q * q + 0.5, "p2": p * p + 0.5, "qp_sym": q * p, "N": abs(a) ** 2}
        entries.append(CatalogueEntry(f"coherent:{a.real:g}{a.imag:+g}j", density_from_pure(psi), psi, mom))
    entries.append(CatalogueEntry("thermal:0.3", thermal(0.3, grid), None, _thermal_moments(0.3)))
    rho = mix([(0.5, fock(0, grid)), (0.5, fock(1, grid))])
    entries.append(CatalogueEntry("mix:fock0+fock1", rho, None,
                                  {"q": 0.0, "p": 0.0, "q2": 1.0, "p2": 1.0, "qp_sym": 0.0, "N": 0.5}))
    return entries
