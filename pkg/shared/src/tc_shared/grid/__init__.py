"""Radial grid, grid functions, norms and test-function families."""

from .grid_defs import GridScheme, NormKind
from .radial_grid import GridFunction, RadialGrid, build_grid, differentiate, norm
from .sampling import BumpFamily, bump_family, compact_bump, ring_profile

__all__ = [
    "GridScheme",
    "NormKind",
    "GridFunction",
    "RadialGrid",
    "build_grid",
    "differentiate",
    "norm",
    "BumpFamily",
    "bump_family",
    "compact_bump",
    "ring_profile",
]
