"""Mode-wise stream function: (d^2/dr^2 - (k^2 - 1/4)/r^2) phi_k = e^{-r^2/8} w_k.

The homogeneous branches are u1 = r^{1/2+nu} (regular at the origin) and
u2 = r^{1/2-nu} (decaying), nu = |k|, with Wronskian u1 u2' - u1' u2 = -2 nu.
With D(x, y) = u1(x) u2(y) - u2(x) u1(y) = 2 sqrt(xy) sinh(nu log(x/y)) the
three-point relation

    D(r_i, r_{i+1}) phi_{i-1} + D(r_{i+1}, r_{i-1}) phi_i + D(r_{i-1}, r_i) phi_{i+1}

annihilates both branches, and its value on a particular solution is the
integral of the local Green's kernel against the right-hand side over
[r_{i-1}, r_{i+1}]. That integral is taken with five-point Gauss-Legendre
against a piecewise-cubic interpolant of e^{-r^2/8} w, so the only error in
the interior rows is interpolation error. The first and last rows follow the
regular and the decaying branch.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.integrate import quad
from scipy.linalg import solve_banded

from tc_shared.errors import ConfigurationError, OperatorError, SolverError
from tc_shared.grid import GridFunction, NormKind, RadialGrid, bump_family
from tc_shared.physics.lab_defaults import GAUSS_LEGENDRE_ORDER, LANCZOS_SEED
from tc_shared.physics.protocol import EllipticAuditReport

logger = logging.getLogger(__name__)

ELLIPTIC_BETAS: tuple[float, ...] = (-4.0, -2.0, -1.0, 0.0, 1.0, 2.0)


def branch_difference(x: np.ndarray, y: np.ndarray, nu: float) -> np.ndarray:
    """D(x, y) = u1(x) u2(y) - u2(x) u1(y)."""
    return 2.0 * np.sqrt(x * y) * np.sinh(nu * np.log(x / y))


def rhs_weight(grid: RadialGrid) -> np.ndarray:
    return np.exp(-(grid.nodes**2) / 8.0)


@dataclass(frozen=True, eq=False)
class StreamPair:
    """Stream function phi_k and phi_breve_k = phi_k / r^{1/2} on one grid."""

    phi: GridFunction
    phi_breve: GridFunction
    k: int


def _lagrange_basis(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Cubic Lagrange basis through 4 nodes per interval: (intervals, points, 4)."""
    basis = np.ones(points.shape + (4,))
    for m in range(4):
        for j in range(4):
            if j != m:
                basis[..., m] *= (points - nodes[:, None, j]) / (
                    nodes[:, None, m] - nodes[:, None, j]
                )
    return basis


class StreamSolver:
    """Fitted banded solver for the mode-wise stream equation on one grid.

    Per-|k| system bands and right-hand-side quadrature matrices are built on
    first use and cached; the cache is guarded so one solver can be shared
    between worker threads.
    """

    def __init__(self, grid: RadialGrid, order: int = GAUSS_LEGENDRE_ORDER) -> None:
        # Preconditions
        assert grid.n >= 4, f"stream solver needs at least 4 nodes, not {grid.n}"

        self.grid = grid
        self._order = order
        self._cache: dict[int, tuple[np.ndarray, sparse.csr_matrix]] = {}
        self._lock = threading.Lock()
        self._quadrature = self._interval_quadrature()

    def _interval_quadrature(self) -> tuple[np.ndarray, ...]:
        r = self.grid.nodes
        n = self.grid.n
        x, wq = leggauss(self._order)
        left = r[:-1]
        half = 0.5 * (r[1:] - r[:-1])
        points = (left + half)[:, None] + half[:, None] * x[None, :]
        weights = half[:, None] * wq[None, :]
        starts = np.clip(np.arange(n - 1) - 1, 0, n - 4)
        stencil = starts[:, None] + np.arange(4)[None, :]
        basis = _lagrange_basis(r[stencil], points)
        return points, weights, stencil, basis

    def _system(self, nu: int) -> tuple[np.ndarray, sparse.csr_matrix]:
        with self._lock:
            cached = self._cache.get(nu)
            if cached is None:
                cached = self._assemble(nu)
                self._cache[nu] = cached
            return cached

    def _assemble(self, nu: int) -> tuple[np.ndarray, sparse.csr_matrix]:
        r = self.grid.nodes
        n = self.grid.n
        wronskian = -2.0 * nu

        bands = np.zeros((3, n))
        lower = branch_difference(r[1:-1], r[2:], nu)  # coefficient of phi_{i-1}
        diag = branch_difference(r[2:], r[:-2], nu)
        upper = branch_difference(r[:-2], r[1:-1], nu)  # coefficient of phi_{i+1}
        bands[1, 1:-1] = diag
        bands[2, :-2] = lower
        bands[0, 2:] = upper
        # Regular branch at the origin, decaying branch at r_max
        bands[1, 0] = 1.0
        bands[0, 1] = -((r[0] / r[1]) ** (0.5 + nu))
        bands[1, -1] = 1.0
        bands[2, -2] = -((r[-1] / r[-2]) ** (0.5 - nu))

        points, weights, stencil, basis = self._quadrature
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        j = np.arange(n - 1)

        # Interval j = [r_j, r_{j+1}] is the right half of row i = j
        right_rows = j[1 : n - 1]
        kernel = (
            branch_difference(r[right_rows - 1], r[right_rows], nu)[:, None]
            * branch_difference(points[right_rows], r[right_rows + 1][:, None], nu)
            / wronskian
        )
        self._accumulate(
            rows, cols, vals, right_rows, right_rows, kernel, weights, stencil, basis
        )

        # ... and the left half of row i = j + 1
        left_rows = j[: n - 2]
        kernel = (
            -branch_difference(r[left_rows + 1], r[left_rows + 2], nu)[:, None]
            * branch_difference(points[left_rows], r[left_rows][:, None], nu)
            / wronskian
        )
        self._accumulate(
            rows, cols, vals, left_rows + 1, left_rows, kernel, weights, stencil, basis
        )

        rhs_matrix = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        logger.debug("assembled stream system nu=%d n=%d", nu, n)
        return bands, rhs_matrix

    @staticmethod
    def _accumulate(
        rows, cols, vals, row_index, intervals, kernel, weights, stencil, basis
    ) -> None:
        # contribution[i, m] = sum_q weight_q kernel_q basis_qm
        contribution = np.einsum(
            "iq,iq,iqm->im", weights[intervals], kernel, basis[intervals]
        )
        rows.append(np.repeat(row_index, 4))
        cols.append(stencil[intervals].ravel())
        vals.append(contribution.ravel())

    def solve(self, w: GridFunction | np.ndarray, k: int) -> StreamPair:
        if k == 0:
            raise OperatorError("the stream equation is solved for |k| >= 1")
        values = np.asarray(getattr(w, "values", w))
        self.grid.check_values(values)
        if not np.all(np.isfinite(values)):
            raise OperatorError("stream right-hand side contains non-finite entries")

        bands, rhs_matrix = self._system(abs(int(k)))
        rhs = rhs_matrix @ (rhs_weight(self.grid) * values)
        try:
            phi = solve_banded((1, 1), bands, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular stream system for k={k}: {exc}") from exc
        return StreamPair(
            phi=GridFunction(self.grid, phi),
            phi_breve=GridFunction(self.grid, phi / np.sqrt(self.grid.nodes)),
            k=int(k),
        )


def solve_stream(w: GridFunction, k: int, grid: RadialGrid | None = None) -> StreamPair:
    """One-shot stream solve; reuse a StreamSolver for repeated solves."""
    return StreamSolver(grid or w.grid).solve(w, k)


def stream_residual(pair: StreamPair, w: GridFunction, *, margin: int = 2) -> float:
    """Max interior residual of the plain three-point stencil, relative to max |e^{-r^2/8} w|."""
    grid = pair.phi.grid
    r = grid.nodes
    phi = pair.phi.values
    source = rhs_weight(grid) * w.values
    residual = grid.d2 @ phi - (pair.k**2 - 0.25) * phi / r**2 - source
    interior = slice(margin, grid.n - margin)
    scale = max(float(np.max(np.abs(source))), np.finfo(float).tiny)
    return float(np.max(np.abs(residual[interior])) / scale)


def homogeneous_residual(grid: RadialGrid, k: int, r_lo: float = 1.0, r_hi: float | None = None) -> float:
    """Plain stencil applied to r^{1/2+|k|} on [r_lo, r_hi], relative to the branch size."""
    r = grid.nodes
    r_hi = grid.r_max - 1.0 if r_hi is None else r_hi
    u = r ** (0.5 + abs(k))
    residual = grid.d2 @ u - (k * k - 0.25) * u / r**2
    window = (r >= r_lo) & (r <= r_hi)
    return float(np.max(np.abs(residual[window]) / u[window]))


def zero_mode_velocity(w0: GridFunction | np.ndarray, grid: RadialGrid) -> np.ndarray:
    """d/dr phi_breve_0 = r^{-1} int_0^r s^{1/2} e^{-s^2/8} w0(s) ds.

    The running integral uses the cell quadrature, taking half of the
    current cell.
    """
    values = np.asarray(getattr(w0, "values", w0))
    r = grid.nodes
    integrand = grid.weights * np.sqrt(r) * np.exp(-(r**2) / 8.0) * values
    running = np.cumsum(integrand) - 0.5 * integrand
    return running / r


def green_oracle(w, k: int, grid: RadialGrid, *, upper: float | None = None) -> np.ndarray:
    """phi from the free-space Green's function by adaptive quadrature.

        phi(r) = -(1 / (2 nu)) [u2(r) int_0^r u1 g + u1(r) int_r^R u2 g]

    with g = e^{-s^2/8} w(s). `w` is a callable of r, so the oracle shares
    no discretization with the banded solver. R defaults to r_max.
    """
    if k == 0:
        raise OperatorError("the Green's oracle is defined for |k| >= 1")
    nu = abs(int(k))
    r = grid.nodes
    top = grid.r_max if upper is None else float(upper)
    is_real = np.isrealobj(w(r))

    def integral(power: float, a: float, b: float) -> complex:
        def part(s: float, take) -> float:
            return float(take(s**power * np.exp(-s * s / 8.0) * w(np.array([s]))[0]))

        options = {"epsabs": 1e-15, "epsrel": 1e-12, "limit": 200}
        total = quad(part, a, b, args=(np.real,), **options)[0]
        if not is_real:
            total += 1j * quad(part, a, b, args=(np.imag,), **options)[0]
        return total

    edges = np.concatenate([[0.0], r, [top]])
    inner = np.array(
        [integral(0.5 + nu, a, b) for a, b in zip(edges[:-2], edges[1:-1], strict=True)]
    )
    outer = np.array(
        [integral(0.5 - nu, a, b) for a, b in zip(edges[1:-1], edges[2:], strict=True)]
    )
    below = np.cumsum(inner)  # int_0^{r_i}
    above = np.cumsum(outer[::-1])[::-1]  # int_{r_i}^R
    return -(r ** (0.5 - nu) * below + r ** (0.5 + nu) * above) / (2.0 * nu)


def manufactured_pair(grid: RadialGrid, k: int) -> tuple[np.ndarray, np.ndarray]:
    """phi* = r^{1/2+nu} e^{-r^2/4} and the w* that produces it."""
    nu = abs(k)
    r = grid.nodes
    phi = r ** (0.5 + nu) * np.exp(-(r**2) / 4.0)
    w = (r**2 / 4.0 - nu - 1.0) * r ** (0.5 + nu) * np.exp(-(r**2) / 8.0)
    return phi, w


def coercivity_check(pair: StreamPair, w: GridFunction | np.ndarray, beta: float) -> float:
    """Margin of Re<-e^{-r^2/8} w, r^b phi> / (k^2 ||r^{b/2-1} phi||^2) over 1 - b^2/(4k^2).

    1 - b^2/(4k^2) is the Hardy-sharp lower constant; it is positive only for
    |b| < 2|k|, which is required here.
    """
    k = abs(pair.k)
    if not abs(beta) < 2 * k:
        raise ConfigurationError(f"coercivity check needs |beta| < 2|k|, got beta={beta}, k={k}")
    grid = pair.phi.grid
    r = grid.nodes
    phi = pair.phi.values
    source = rhs_weight(grid) * np.asarray(getattr(w, "values", w))
    low = grid.norm_of(r ** (beta / 2 - 1) * phi, NormKind.L2)
    if low == 0.0:
        return 0.0
    pairing = -float(np.real(np.sum(grid.weights * np.conj(source) * r**beta * phi)))
    return pairing / (k * k * low**2) - (1.0 - beta**2 / (4.0 * k * k))


def _elliptic_terms(pair: StreamPair, w: np.ndarray, beta: float) -> dict[str, float] | None:
    grid = pair.phi.grid
    r = grid.nodes
    k = abs(pair.k)
    phi = pair.phi.values
    source = rhs_weight(grid) * w
    scale = grid.norm_of(r ** (beta / 2 + 1) * source, NormKind.L2)
    if scale == 0.0:
        return None
    dphi = np.gradient(phi, r, edge_order=2)
    d2phi = (k * k - 0.25) * phi / r**2 + source
    return {
        "second": grid.norm_of(r ** (beta / 2 + 1) * d2phi, NormKind.L2) / scale,
        "first": k * grid.norm_of(r ** (beta / 2) * dphi, NormKind.L2) / scale,
        "zero": k * k * grid.norm_of(r ** (beta / 2 - 1) * phi, NormKind.L2) / scale,
        "first_sup": np.sqrt(k) * float(np.max(np.abs(r ** ((beta + 1) / 2) * dphi))) / scale,
        "zero_sup": k**1.5 * float(np.max(np.abs(r ** ((beta - 1) / 2) * phi))) / scale,
    }


def elliptic_estimate_audit(
    grid: RadialGrid,
    k: int,
    beta: float,
    samples,
    *,
    rng: np.random.Generator | None = None,
    solver: StreamSolver | None = None,
) -> EllipticAuditReport:
    """Empirical constants of the five weighted elliptic bounds.

    For each sample w the stream function is solved and the ratios of

        ||r^{b/2+1} phi''||, |k| ||r^{b/2} phi'||, k^2 ||r^{b/2-1} phi||,
        |k|^{1/2} ||r^{(b+1)/2} phi'||_inf, |k|^{3/2} ||r^{(b-1)/2} phi||_inf

    to ||r^{b/2+1} e^{-r^2/8} w|| are recorded. phi'' is taken from the
    equation itself, phi' by second-order differences. Where |b| < 2|k| the
    smallest coercivity margin is recorded as well.
    """
    if beta not in ELLIPTIC_BETAS:
        raise ConfigurationError(f"beta must be one of {ELLIPTIC_BETAS}, not {beta}")
    solver = solver or StreamSolver(grid)
    if isinstance(samples, int):
        generator = rng or np.random.default_rng(LANCZOS_SEED)
        vectors = [bump_family(grid, generator).values(grid.nodes) for _ in range(samples)]
    else:
        vectors = [np.asarray(getattr(w, "values", w)) for w in samples]

    checked = abs(beta) < 2 * abs(k)
    constants = {"second": 0.0, "first": 0.0, "zero": 0.0, "first_sup": 0.0, "zero_sup": 0.0}
    margin = np.inf
    count = 0
    for w in vectors:
        pair = solver.solve(w, k)
        terms = _elliptic_terms(pair, w, beta)
        if terms is None:
            continue
        count += 1
        for name, value in terms.items():
            constants[name] = max(constants[name], float(value))
        if checked:
            margin = min(margin, coercivity_check(pair, w, beta))

    if checked and count and margin < 0.0:
        logger.warning("coercivity margin %.3g below zero for k=%d beta=%g", margin, k, beta)
    logger.info("elliptic audit k=%d beta=%g: %s", k, beta, constants)
    return EllipticAuditReport(
        k=int(k),
        beta=float(beta),
        samples=count,
        constants=constants,
        coercivity_checked=checked,
        coercivity_margin_min=float(margin) if checked and count else 0.0,
    )
