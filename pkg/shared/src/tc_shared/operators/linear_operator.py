"""Assembly of the linearized mode operators.

In the f-weighted variable the linearization about the rotating base flow is,
for each azimuthal mode k,

    L_k w = -w'' + ((k^2 - 1/4) / r^2 + r^2 / 16 - 1/2) w + i (k B / r^2) w

with w = 0 at r = 0 and r = r_max. The zero mode has the same real part with
k = 0 and no rotation term.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from ..errors import OperatorError
from ..grid.radial_grid import RadialGrid
from ..physics.flow_params import FlowParams
from ..physics.protocol import SpectrumCheck
from .banded import BandedComplexOperator

logger = logging.getLogger(__name__)


def potential(grid: RadialGrid, k: int) -> np.ndarray:
    """Real potential (k^2 - 1/4)/r^2 + r^2/16 - 1/2 at the nodes."""
    r = grid.nodes
    return (k * k - 0.25) / r**2 + r**2 / 16.0 - 0.5


def _laplacian_bands(grid: RadialGrid) -> np.ndarray:
    return -np.array(grid.second_derivative_bands, dtype=complex)


def assemble_Lk(grid: RadialGrid, k: int, params: FlowParams) -> BandedComplexOperator:
    if k == 0:
        raise OperatorError("assemble_Lk needs |k| >= 1; use assemble_L0 for the zero mode")

    beta = params.beta(k)
    bands = _laplacian_bands(grid)
    bands[1] += potential(grid, k) + 1j * beta / grid.nodes**2
    op = BandedComplexOperator(bands=bands, grid=grid, k=int(k), B=params.B)

    # Postconditions
    assert np.allclose(
        np.imag(op.diagonal), beta / grid.nodes**2
    ), "imaginary diagonal must equal kB/r^2"
    return op


def assemble_L0(grid: RadialGrid) -> BandedComplexOperator:
    """Zero-mode operator -w'' + (-1/4 r^-2 + r^2/16 - 1/2) w."""
    bands = _laplacian_bands(grid)
    bands[1] += potential(grid, 0)
    return BandedComplexOperator(bands=bands, grid=grid, k=0, B=0.0)


def resolvent_matrix(op: BandedComplexOperator, s: float) -> BandedComplexOperator:
    """L_k - i s."""
    if not np.isfinite(s):
        raise OperatorError(f"shift must be finite, not {s}")
    return op.with_shift(s_imag=float(s))


def symmetric_tridiagonal(op: BandedComplexOperator) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of W^{1/2} L W^{-1/2} for a self-adjoint L."""
    if not op.is_self_adjoint():
        raise OperatorError("operator is not self-adjoint (B != 0 or shifted)")
    diag = np.real(op.diagonal)
    off = -np.sqrt(np.real(op.bands[0, 1:] * op.bands[2, :-1]))
    return diag, off


def ou_spectrum_check(
    grid: RadialGrid, k_values: list[int] | tuple[int, ...], count: int = 3
) -> list[SpectrumCheck]:
    """Lowest eigenvalues of the non-rotating operators against (|k| + 2m) / 2."""
    checks: list[SpectrumCheck] = []
    for k in k_values:
        op = assemble_L0(grid) if k == 0 else assemble_Lk(grid, k, FlowParams.from_B(0.0))
        diag, off = symmetric_tridiagonal(op)
        computed = eigvalsh_tridiagonal(
            diag, off, select="i", select_range=(0, count - 1)
        )
        expected = [(abs(k) + 2 * m) / 2.0 for m in range(count)]
        error = float(np.max(np.abs(computed - expected)))
        logger.debug("spectrum k=%d lowest=%s error=%.3g", k, computed, error)
        checks.append(
            SpectrumCheck(
                k=int(k),
                computed=[float(x) for x in computed],
                expected=expected,
                max_error=error,
            )
        )
    return checks
