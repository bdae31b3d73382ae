"""Radial discretization of (0, r_max]: nodes, quadrature, stencils and norms.

Nodes are cell centres, the faces r = 0 and r = r_max carry the Dirichlet
condition through odd-reflection ghosts. The quadrature weight of a node is the
width of its cell, so sum(weights) equals r_max exactly and the second-derivative
stencil is self-adjoint in the weighted inner product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.linalg import cholesky_banded, solve_banded, solveh_banded

from ..errors import ConfigurationError, OperatorError
from ..physics.lab_defaults import MIN_GRID_POINTS, STRETCH_FACTOR
from ..physics.protocol import GridSpec
from .grid_defs import GridScheme, NormKind

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Cell-centred grid on (0, r_max].

    Attributes:
        faces: cell boundaries 0 = x_0 < x_1 < ... < x_N = r_max
        scheme: how the faces were laid out
    """

    faces: np.ndarray
    scheme: GridScheme = GridScheme.UNIFORM

    # -- geometry ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.faces) - 1

    @property
    def r_max(self) -> float:
        return float(self.faces[-1])

    @cached_property
    def nodes(self) -> np.ndarray:
        return _frozen(0.5 * (self.faces[1:] + self.faces[:-1]))

    @cached_property
    def weights(self) -> np.ndarray:
        return _frozen(np.diff(self.faces))

    @property
    def h(self) -> float:
        """Largest cell width."""
        return float(self.weights.max())

    @cached_property
    def face_gaps(self) -> np.ndarray:
        """Node-to-node distances across each face, ghosts included (length N+1)."""
        r = self.nodes
        gaps = np.empty(self.n + 1)
        gaps[0] = 2.0 * r[0]
        gaps[1:-1] = np.diff(r)
        gaps[-1] = 2.0 * (self.r_max - r[-1])
        return _frozen(gaps)

    @cached_property
    def fweight(self) -> np.ndarray:
        """The similarity weight e^{-r^2/8} / r^{1/2} at the nodes."""
        r = self.nodes
        return _frozen(np.exp(-(r**2) / 8.0) / np.sqrt(r))

    def describe(self) -> GridSpec:
        return GridSpec(
            n=self.n,
            r_max=self.r_max,
            scheme=self.scheme.value,
            h_min=float(self.weights.min()),
            h_max=float(self.weights.max()),
        )

    # -- stencils ---------------------------------------------------------

    @cached_property
    def second_derivative_bands(self) -> np.ndarray:
        """D2 in solve_banded (1, 1) layout: rows upper, diagonal, lower."""
        vol = self.weights
        left = self.face_gaps[:-1]
        right = self.face_gaps[1:]
        bands = np.zeros((3, self.n))
        bands[1] = -(1.0 / left + 1.0 / right) / vol
        # Odd reflection: ghost value is -w at both ends
        bands[1, 0] -= 1.0 / (vol[0] * left[0])
        bands[1, -1] -= 1.0 / (vol[-1] * right[-1])
        bands[0, 1:] = 1.0 / (vol[:-1] * right[:-1])
        bands[2, :-1] = 1.0 / (vol[1:] * left[1:])
        return _frozen(bands)

    @cached_property
    def first_derivative_bands(self) -> np.ndarray:
        """Skew first derivative W^{-1} S with zero ghosts, (1, 1) layout.

        W D1 is exactly skew-symmetric, so <D1 f, v> = -<f, D1 v> holds to
        round-off for every pair of grid functions.
        """
        vol = self.weights
        bands = np.zeros((3, self.n))
        bands[0, 1:] = 0.5 / vol[:-1]
        bands[2, :-1] = -0.5 / vol[1:]
        return _frozen(bands)

    @staticmethod
    def _bands_to_sparse(bands: np.ndarray) -> sparse.csr_matrix:
        return sparse.diags(
            [bands[2, :-1], bands[1], bands[0, 1:]], offsets=[-1, 0, 1], format="csr"
        )

    @cached_property
    def d1(self) -> sparse.csr_matrix:
        return self._bands_to_sparse(self.first_derivative_bands)

    @cached_property
    def d2(self) -> sparse.csr_matrix:
        return self._bands_to_sparse(self.second_derivative_bands)

    @cached_property
    def stiffness_bands(self) -> np.ndarray:
        """K = -W D2 (symmetric positive definite) in upper solveh_banded layout."""
        ab = np.zeros((2, self.n))
        ab[1] = -self.weights * self.second_derivative_bands[1]
        ab[0, 1:] = -1.0 / self.face_gaps[1:-1]
        return _frozen(ab)

    @cached_property
    def h1_bands(self) -> np.ndarray:
        """S = W + K, the Dirichlet H1 Gram matrix, upper solveh_banded layout."""
        ab = np.array(self.stiffness_bands)
        ab[1] += self.weights
        return _frozen(ab)

    @cached_property
    def h1_factor(self) -> np.ndarray:
        """Upper Cholesky factor G of S (S = G^H G), same banded layout."""
        return _frozen(cholesky_banded(self.h1_bands, lower=False))

    # -- H1 factor helpers -------------------------------------------------

    def apply_h1_factor(self, v: np.ndarray) -> np.ndarray:
        """G v."""
        g = self.h1_factor
        out = g[1] * v
        out[:-1] += g[0, 1:] * v[1:]
        return out

    def apply_h1_factor_adjoint(self, v: np.ndarray) -> np.ndarray:
        """G^H v (G is real)."""
        g = self.h1_factor
        out = g[1] * v
        out[1:] += g[0, 1:] * v[:-1]
        return out

    def solve_h1_factor(self, v: np.ndarray) -> np.ndarray:
        """G^{-1} v."""
        return solve_banded((0, 1), self.h1_factor, v)

    def solve_h1_factor_adjoint(self, v: np.ndarray) -> np.ndarray:
        """G^{-H} v."""
        g = self.h1_factor
        ab = np.zeros_like(g)
        ab[0] = g[1]
        ab[1, :-1] = g[0, 1:]
        return solve_banded((1, 0), ab, v)

    # -- quadrature and norms ---------------------------------------------

    def inner(self, f: np.ndarray, v: np.ndarray) -> complex:
        """Quadrature inner product sum w_i conj(f_i) v_i."""
        return complex(np.sum(self.weights * np.conj(f) * v))

    def stiffness_form(self, f: np.ndarray) -> float:
        """f^H K f, the discrete ||f'||^2 with Dirichlet ghosts."""
        ab = self.stiffness_bands
        kf = ab[1] * f
        kf[:-1] += ab[0, 1:] * f[1:]
        kf[1:] += ab[0, 1:] * f[:-1]
        return float(np.real(np.vdot(f, kf)))

    def norm_of(self, values: np.ndarray, kind: NormKind) -> float:
        """Norm of a node-value array (no wrapping or validation)."""
        f = np.asarray(values)
        r = self.nodes
        if kind is NormKind.L2:
            return float(np.sqrt(np.sum(self.weights * np.abs(f) ** 2)))
        if kind is NormKind.X:
            return float(np.sqrt(np.sum(self.weights * np.abs(f) ** 2 / r**2)))
        if kind is NormKind.H1:
            l2_sq = float(np.sum(self.weights * np.abs(f) ** 2))
            return float(np.sqrt(l2_sq + self.stiffness_form(f)))
        if kind is NormKind.HM1:
            y = self.weights * f
            x = solveh_banded(self.h1_bands, y)
            return float(np.sqrt(max(np.real(np.vdot(y, x)), 0.0)))
        if kind is NormKind.M:
            # |f| e^{r^2/8} keeps the exponential within range
            scaled = np.abs(f) * np.exp(r**2 / 8.0)
            return float(np.sqrt(np.sum(self.weights * r * scaled**2)))
        raise OperatorError(f"Unknown norm kind: {kind}")

    def check_values(self, values: np.ndarray) -> None:
        if np.shape(values) != (self.n,):
            raise OperatorError(
                f"grid function has shape {np.shape(values)}, grid has {self.n} nodes"
            )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex node values aligned with a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        self.grid.check_values(values)
        if not np.all(np.isfinite(values)):
            raise OperatorError("grid function contains non-finite entries")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def zeros(cls, grid: RadialGrid) -> GridFunction:
        return cls(grid, np.zeros(grid.n, dtype=complex))

    def __len__(self) -> int:
        return len(self.values)

    def conj(self) -> GridFunction:
        return GridFunction(self.grid, np.conj(self.values))

    def norm(self, kind: NormKind = NormKind.L2) -> float:
        return self.grid.norm_of(self.values, kind)

    def is_zero(self) -> bool:
        return not np.any(self.values)


def build_grid(
    n: int,
    r_max: float,
    scheme: GridScheme | str = GridScheme.UNIFORM,
    *,
    stretch: float = STRETCH_FACTOR,
) -> RadialGrid:
    """Lay out n cells on (0, r_max].

    Uniform cells put node i at (i - 1/2) h. Stretched cells use faces
    r_max sinh(stretch j/n) / sinh(stretch), clustering resolution at the origin
    where the k^2/r^2 potential lives.
    """
    scheme = GridScheme(scheme)
    if int(n) != n or n < MIN_GRID_POINTS:
        raise ConfigurationError(f"n must be an integer >= {MIN_GRID_POINTS}, not {n}")
    if not (np.isfinite(r_max) and r_max > 0.0):
        raise ConfigurationError(f"r_max must be finite and > 0, not {r_max}")
    n = int(n)

    if scheme is GridScheme.UNIFORM:
        faces = np.linspace(0.0, float(r_max), n + 1)
    else:
        if not stretch > 0.0:
            raise ConfigurationError(f"stretch must be > 0, not {stretch}")
        j = np.arange(n + 1) / n
        faces = float(r_max) * np.sinh(stretch * j) / np.sinh(stretch)
    faces[0] = 0.0
    faces[-1] = float(r_max)
    grid = RadialGrid(faces=_frozen(faces), scheme=scheme)

    # Postconditions
    assert grid.nodes[0] > 0.0, "first node must avoid r = 0"
    assert np.all(np.diff(grid.nodes) > 0.0), "nodes must be strictly increasing"
    assert np.all(grid.weights > 0.0), "quadrature weights must be positive"

    logger.debug("built %s grid n=%d r_max=%g", scheme.value, n, r_max)
    return grid


def norm(f: GridFunction, which: NormKind | str) -> float:
    """Quadrature value of the requested norm of f."""
    return f.grid.norm_of(f.values, NormKind(which))


def differentiate(f: GridFunction, order: int) -> GridFunction:
    """First or second radial derivative with Dirichlet boundary rows."""
    if order == 1:
        return GridFunction(f.grid, f.grid.d1 @ f.values)
    if order == 2:
        return GridFunction(f.grid, f.grid.d2 @ f.values)
    raise OperatorError(f"order must be 1 or 2, not {order}")
