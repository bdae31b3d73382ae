"""Banded realizations of the linearized mode operators."""

from .banded import BandedComplexOperator
from .linear_operator import (
    assemble_L0,
    assemble_Lk,
    ou_spectrum_check,
    potential,
    resolvent_matrix,
    symmetric_tridiagonal,
)

__all__ = [
    "BandedComplexOperator",
    "assemble_L0",
    "assemble_Lk",
    "ou_spectrum_check",
    "potential",
    "resolvent_matrix",
    "symmetric_tridiagonal",
]
