"""Exception types raised by tomoscope."""

from __future__ import annotations


class TomoscopeError(Exception):
    """Base class for all library errors."""


class DimensionError(TomoscopeError, ValueError):
    """Array shape does not match the grid it is paired with."""


class ResolutionError(TomoscopeError, ValueError):
    """The requested object cannot be represented on the given grid."""


class InvariantError(TomoscopeError, ValueError):
    """A domain invariant (normalization, hermiticity, ...) is violated."""


class ZeroModeError(TomoscopeError, ValueError):
    """Inverse derivative requested for an operand with a nonvanishing mean."""

    def __init__(self, mean: float, tol: float):
        self.mean = mean
        self.tol = tol
        super().__init__(
            f"operand has nonzero mean {mean:.3e} (tolerance {tol:.1e}); "
            "the k=0 mode of the inverse derivative is undefined"
        )


class RepresentationError(TomoscopeError, ValueError):
    """Operand is in a representation the operation cannot act on."""


class GridMismatchError(TomoscopeError, ValueError):
    """Two operands live on incompatible grids."""
