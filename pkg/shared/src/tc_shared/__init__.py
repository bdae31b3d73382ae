"""Shared numerical core of the Taylor-Couette stability lab.

This package holds everything the engines and the command line agree on:
the radial grid and its norms, the banded mode operators, flow parameters,
lab defaults, result contracts and error types.
"""

from .errors import (
    ConfigurationError,
    OperatorError,
    ResolutionError,
    RiccatiCrossingError,
    SolverError,
)
from .grid import (
    GridFunction,
    GridScheme,
    NormKind,
    RadialGrid,
    build_grid,
    differentiate,
    norm,
)
from .operators import (
    BandedComplexOperator,
    assemble_L0,
    assemble_Lk,
    resolvent_matrix,
)
from .physics import FlowParams

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # Errors
    "ConfigurationError",
    "OperatorError",
    "ResolutionError",
    "RiccatiCrossingError",
    "SolverError",
    # Grid
    "GridFunction",
    "GridScheme",
    "NormKind",
    "RadialGrid",
    "build_grid",
    "differentiate",
    "norm",
    # Operators
    "BandedComplexOperator",
    "assemble_L0",
    "assemble_Lk",
    "resolvent_matrix",
    # Parameters
    "FlowParams",
]
