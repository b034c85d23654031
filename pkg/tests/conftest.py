from __future__ import annotations

import numpy as np
import pytest

from tomoscope.numgrid import DEFAULT_ANGLES, DEFAULT_GRID, AngleGrid
from tomoscope.radon import tomogram_from_density
from tomoscope.states import catalogue, coherent, density_from_pure, fock


@pytest.fixture(scope="session")
def grid():
    return DEFAULT_GRID


@pytest.fixture(scope="session")
def agrid():
    return DEFAULT_ANGLES


@pytest.fixture(scope="session")
def states(grid):
    return catalogue(grid)


@pytest.fixture(scope="session")
def tomograms(states, agrid):
    return {e.name: tomogram_from_density(e.rho, agrid) for e in states}


@pytest.fixture(scope="session")
def fock_tomo(grid, agrid):
    return [tomogram_from_density(density_from_pure(fock(n, grid)), agrid) for n in range(4)]


@pytest.fixture(scope="session")
def coarse():
    """Smaller angle grid for tests that do not need the default resolution."""
    return AngleGrid(48)


def coherent_tomogram(alpha, grid, agrid):
    return tomogram_from_density(density_from_pure(coherent(alpha, grid)), agrid)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
