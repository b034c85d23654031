"""Optical tomograms of continuous-variable quantum states.

Modules
-------
numgrid     grids, spectral derivatives and whole-line antiderivatives
states      reference states on a coordinate grid
phasespace  Wigner transform pair
radon       density/Wigner to tomogram and filtered backprojection back
tomops      operators acting directly on tomograms
symbols     symbols, dual symbols and the matrix oracle
"""

from .errors import (
    DimensionError,
    GridMismatchError,
    InvariantError,
    RepresentationError,
    ResolutionError,
    TomoscopeError,
    ZeroModeError,
)
from .numgrid import DEFAULT_ANGLES, DEFAULT_GRID, AngleGrid, FilterSpec, Grid1D
from .phasespace import WignerFunction, density_from_wigner, wigner_from_density
from .radon import (
    MultimodeTomogram,
    OpticalTomogram,
    density_from_tomogram,
    tomogram_from_density,
    tomogram_from_wigner,
    wigner_from_tomogram,
)
from .states import (
    UNIT,
    DensityMatrix,
    ModeParams,
    WaveFunction,
    catalogue,
    coherent,
    density_from_pure,
    fock,
    mix,
    thermal,
)
from .symbols import dual_regular, dual_singular, expect, matrix_expectation, operator_matrix, symbol_of
from .tomops import TomogramOperator, compose, expectation, op_a, op_adag, op_l, op_N, op_p, op_p2, op_q, op_q2, op_qp

__version__ = "0.1.0"
