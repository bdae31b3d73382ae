from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from ..errors import OperatorError, SolverError
from ..grid.radial_grid import RadialGrid


@dataclass(frozen=True, eq=False)
class BandedComplexOperator:
    """Tridiagonal complex operator on a RadialGrid.

    Attributes:
        bands: (3, N) complex array in solve_banded (1, 1) layout
            (row 0 upper diagonal shifted right, row 1 diagonal, row 2 lower)
        grid: grid the rows are attached to
        k: azimuthal mode (0 for the zero-mode operator)
        B: rotation ratio the imaginary potential was built with
        shift_real: c in L - c (already folded into the diagonal)
        shift_imag: s in L - i s (already folded into the diagonal)
    """

    bands: np.ndarray
    grid: RadialGrid
    k: int
    B: float = 0.0
    shift_real: float = 0.0
    shift_imag: float = 0.0

    def __post_init__(self) -> None:
        if self.bands.shape != (3, self.grid.n):
            raise OperatorError(
                f"bands shape {self.bands.shape} does not match grid size {self.grid.n}"
            )
        self.bands.setflags(write=False)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def diagonal(self) -> np.ndarray:
        return self.bands[1]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        self.grid.check_values(v)
        out = self.bands[1] * v
        out[:-1] += self.bands[0, 1:] * v[1:]
        out[1:] += self.bands[2, :-1] * v[:-1]
        return out

    def to_sparse(self) -> sparse.csc_matrix:
        return sparse.diags(
            [self.bands[2, :-1], self.bands[1], self.bands[0, 1:]],
            offsets=[-1, 0, 1],
            format="csc",
        )

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def with_shift(self, s_imag: float = 0.0, s_real: float = 0.0) -> BandedComplexOperator:
        """Return L - s_real - i s_imag; boundary rows only change on the diagonal."""
        if s_imag == 0.0 and s_real == 0.0:
            return self
        bands = np.array(self.bands)
        bands[1] = bands[1] - s_real - 1j * s_imag
        return replace(
            self,
            bands=bands,
            shift_real=self.shift_real + s_real,
            shift_imag=self.shift_imag + s_imag,
        )

    def affine(self, alpha: complex, beta: complex) -> BandedComplexOperator:
        """alpha I + beta L (used for the Crank-Nicolson pair)."""
        bands = beta * np.array(self.bands)
        bands[1] += alpha
        return replace(self, bands=bands)

    def quadratic_form(self, w: np.ndarray) -> complex:
        """<L w, w> in the grid inner product."""
        return self.grid.inner(w, self.matvec(w))

    def is_self_adjoint(self, rtol: float = 1e-12) -> bool:
        """True when W L is Hermitian, i.e. L is self-adjoint in the grid inner product."""
        vol = self.grid.weights
        upper = vol[:-1] * self.bands[0, 1:]
        lower = vol[1:] * self.bands[2, :-1]
        scale = np.max(np.abs(vol * self.bands[1]))
        return bool(
            np.allclose(upper, np.conj(lower), rtol=rtol, atol=rtol * scale)
            and np.allclose(np.imag(self.bands[1]), 0.0, atol=rtol * scale)
        )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """One-shot banded solve L x = rhs."""
        try:
            return solve_banded((1, 1), self.bands, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular operator for k={self.k}: {exc}") from exc

    @cached_property
    def lu(self):
        """Sparse LU factorization, reusable across right-hand sides.

        `op.lu.solve(b)` solves L x = b and `op.lu.solve(b, trans="H")` solves
        L^H x = b.
        """
        try:
            return splu(self.to_sparse())
        except RuntimeError as exc:
            raise SolverError(f"factorization failed for k={self.k}: {exc}") from exc
