"""Exception types raised across the lab.

Contract violations inside the code are guarded with asserts; the classes below
are for failures a caller can trigger with bad input or a bad discretization.
"""

from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid grid size, domain, physical parameter or run configuration."""


class OperatorError(ValueError):
    """Operator request that does not make sense (wrong mode, mismatched grids)."""


class ResolutionError(ValueError):
    """The grid is too coarse for the requested construction."""


class SolverError(RuntimeError):
    """A factorization or linear solve failed."""


class RiccatiCrossingError(RuntimeError):
    """The reduced Riccati variable K crossed zero, so g vanishes there.

    Attributes:
        crossing_r: radius at which the crossing was detected
    """

    def __init__(self, crossing_r: float, message: str | None = None) -> None:
        self.crossing_r = float(crossing_r)
        super().__init__(
            message or f"K crosses 0 at r = {self.crossing_r:.6g}; g has a zero there"
        )
