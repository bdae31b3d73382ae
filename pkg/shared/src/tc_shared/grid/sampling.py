"""Smooth test-function families shared by audits, oracles and initial data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..physics.lab_defaults import RING_CENTER
from .grid_defs import NormKind
from .radial_grid import GridFunction, RadialGrid

MIN_BUMPS = 3
MAX_BUMPS = 8


@dataclass(frozen=True, eq=False)
class BumpFamily:
    """Sum of compactly supported bumps a_j psi((r - c_j) / s_j).

    psi(x) = exp(1 - 1 / (1 - x^2)) on |x| < 1 and 0 elsewhere: Gaussian-like
    near its peak (psi(0) = 1), C-infinity, and exactly zero outside the support.
    Values and both derivatives are available in closed form so oracles can
    avoid the grid stencils.
    """

    centers: np.ndarray
    widths: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        # Preconditions
        assert (
            len(self.centers) == len(self.widths) == len(self.amplitudes)
        ), "bump parameter arrays must have equal length"
        assert np.all(np.asarray(self.widths) > 0.0), "bump widths must be positive"

    def support(self) -> tuple[float, float]:
        if len(self.centers) == 0:
            return (0.0, 0.0)
        return (
            float(np.min(self.centers - self.widths)),
            float(np.max(self.centers + self.widths)),
        )

    def _terms(self, r: np.ndarray):
        # x, inside-mask and psi per bump, shaped (bumps, nodes)
        x = (r[None, :] - self.centers[:, None]) / self.widths[:, None]
        inside = np.abs(x) < 1.0
        one_minus = np.where(inside, 1.0 - x**2, 1.0)
        psi = np.where(inside, np.exp(1.0 - 1.0 / one_minus), 0.0)
        return x, one_minus, psi

    def values(self, r: np.ndarray) -> np.ndarray:
        _, _, psi = self._terms(np.asarray(r, dtype=float))
        return self.amplitudes @ psi

    def derivative(self, r: np.ndarray) -> np.ndarray:
        x, one_minus, psi = self._terms(np.asarray(r, dtype=float))
        dq = -2.0 * x / one_minus**2
        return self.amplitudes @ (psi * dq / self.widths[:, None])

    def second_derivative(self, r: np.ndarray) -> np.ndarray:
        x, one_minus, psi = self._terms(np.asarray(r, dtype=float))
        dq = -2.0 * x / one_minus**2
        d2q = -2.0 / one_minus**2 - 8.0 * x**2 / one_minus**3
        return self.amplitudes @ (psi * (dq**2 + d2q) / self.widths[:, None] ** 2)

    def sample(self, grid: RadialGrid) -> GridFunction:
        return GridFunction(grid, self.values(grid.nodes))


def compact_bump(
    center: float, width: float, amplitude: complex = 1.0
) -> BumpFamily:
    return BumpFamily(
        centers=np.array([float(center)]),
        widths=np.array([float(width)]),
        amplitudes=np.array([complex(amplitude)]),
    )


def bump_family(
    grid: RadialGrid,
    rng: np.random.Generator,
    *,
    count: int | None = None,
    r_lo: float | None = None,
    r_hi: float | None = None,
) -> BumpFamily:
    """Random complex combination of 3-8 bumps supported in [2h, r_max/2].

    Each bump is the compactly supported exp(1 - 1/(1 - x^2)), x = (r - c)/width,
    not a Gaussian. Widths are at least eight cells so every bump is resolved
    by the grid.
    """
    lo = max(2.0 * grid.h, 0.0) if r_lo is None else float(r_lo)
    hi = 0.5 * grid.r_max if r_hi is None else float(r_hi)
    width_min = max(8.0 * grid.h, 0.3)
    width_max = min(2.0, 0.5 * (hi - lo))
    if width_min > width_max:
        raise ConfigurationError(
            f"support [{lo:g}, {hi:g}] too narrow for resolved bumps on this grid"
        )
    if count is None:
        count = int(rng.integers(MIN_BUMPS, MAX_BUMPS + 1))

    widths = rng.uniform(width_min, width_max, size=count)
    centers = rng.uniform(lo + widths, hi - widths)
    amplitudes = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    family = BumpFamily(centers=centers, widths=widths, amplitudes=amplitudes)

    # Postconditions
    s_lo, s_hi = family.support()
    assert s_lo >= lo - 1e-12 and s_hi <= hi + 1e-12, "bump escaped its support"
    return family


def ring_profile(
    grid: RadialGrid,
    k: int,
    r_c: float = RING_CENTER,
    amplitude: float = 1.0,
) -> GridFunction:
    """r^{|k|} e^{-(r - r_c)^2}, scaled to L2 norm `amplitude`."""
    # Preconditions
    assert amplitude >= 0.0, f"amplitude must be >= 0, not {amplitude}"

    r = grid.nodes
    profile = r ** abs(k) * np.exp(-((r - r_c) ** 2))
    size = grid.norm_of(profile, NormKind.L2)
    if amplitude == 0.0 or size == 0.0:
        return GridFunction.zeros(grid)
    return GridFunction(grid, profile * (amplitude / size))
