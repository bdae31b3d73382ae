"""Smallest singular values of shifted mode operators in weighted norm pairs.

A norm pair measures the input w with ||Q w||_2 and the output F = T w with
||P F||_2, so the quantity of interest is sigma_min(P T Q^{-1}). It is found as
the inverse square root of the largest eigenvalue of the Hermitian operator

    M = Q T^{-1} P^{-1} P^{-H} T^{-H} Q^H

by Lanczos iteration with full reorthogonalization. Each application of M costs
two sparse triangular solve pairs with a factorization computed once per shift.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from tc_shared.errors import OperatorError
from tc_shared.grid import RadialGrid
from tc_shared.operators import BandedComplexOperator
from tc_shared.physics.lab_defaults import (
    DENSE_SVD_LIMIT,
    LANCZOS_MAX_ITER,
    LANCZOS_SEED,
    LANCZOS_TOL,
)
from tc_shared.physics.protocol import NormPairName

logger = logging.getLogger(__name__)

NORM_PAIRS: tuple[NormPairName, ...] = ("L2", "X", "Hm1-shifted", "X-Hm1-shifted")


@dataclass(frozen=True)
class SigmaEstimate:
    """Estimate of sigma_min with its convergence record.

    Attributes:
        value: smallest singular value estimate
        converged: False when the Lanczos budget ran out first
        residual: eigen-residual of the Ritz pair relative to its Ritz value
        iterations: Lanczos steps taken (0 for the dense path)
        method: "lanczos" or "dense"
        vector: minimizing input w (pseudomode) with ||Q w|| = 1, if requested
    """

    value: float
    converged: bool
    residual: float
    iterations: int
    method: str
    vector: np.ndarray | None = None


class NormPair:
    """Congruence factors P and Q of one of the supported norm pairs."""

    def __init__(self, name: NormPairName, grid: RadialGrid) -> None:
        if name not in NORM_PAIRS:
            raise OperatorError(f"unknown norm pair {name!r}, expected one of {NORM_PAIRS}")
        self.name = name
        self.grid = grid
        self._sqrt_w = np.sqrt(grid.weights)
        self._r = grid.nodes
        self._dual = name in ("Hm1-shifted", "X-Hm1-shifted")
        self._weighted = name in ("X", "X-Hm1-shifted")

    @property
    def shifted(self) -> bool:
        """True for the H1 -> H^{-1} pairs, which carry the real shift c2 |beta|^{1/3}."""
        return self._dual

    def q(self, v: np.ndarray) -> np.ndarray:
        if self._weighted:
            v = v / self._r
        if self._dual:
            return self.grid.apply_h1_factor(v)
        return self._sqrt_w * v

    def q_adjoint(self, v: np.ndarray) -> np.ndarray:
        out = self.grid.apply_h1_factor_adjoint(v) if self._dual else self._sqrt_w * v
        return out / self._r if self._weighted else out

    def q_inverse(self, v: np.ndarray) -> np.ndarray:
        out = self.grid.solve_h1_factor(v) if self._dual else v / self._sqrt_w
        return out * self._r if self._weighted else out

    def middle(self, v: np.ndarray) -> np.ndarray:
        """P^{-1} P^{-H} v."""
        vol = self.grid.weights
        if self._weighted:
            v = v * self._r
        if self._dual:
            u = v / vol
            out = self.grid.apply_h1_factor_adjoint(self.grid.apply_h1_factor(u)) / vol
        else:
            out = v / vol
        return out * self._r if self._weighted else out

    def dense_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (P, Q) for the oracle path."""
        n = self.grid.n
        vol = self.grid.weights
        r_inv = np.diag(1.0 / self._r) if self._weighted else np.eye(n)
        if self._dual:
            g = self.grid.h1_factor
            upper = np.diag(g[1]) + np.diag(g[0, 1:], 1)
            p = linalg.solve_triangular(upper.T, np.diag(vol), lower=True) @ r_inv
            q = upper @ r_inv
        else:
            p = np.diag(self._sqrt_w) @ r_inv
            q = p.copy()
        return p, q


def _lanczos_largest(apply_m, n: int, rng: np.random.Generator, tol: float, max_iter: int):
    """Largest eigenpair of a Hermitian positive operator."""
    basis = np.zeros((max_iter + 1, n), dtype=complex)
    q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    basis[0] = q / np.linalg.norm(q)
    alphas: list[float] = []
    betas: list[float] = []

    theta, ritz, residual = 0.0, np.array([1.0]), np.inf
    for j in range(max_iter):
        v = apply_m(basis[j])
        alpha = float(np.real(np.vdot(basis[j], v)))
        v = v - alpha * basis[j]
        if j > 0:
            v = v - betas[-1] * basis[j - 1]
        # Full reorthogonalization against the whole basis
        active = basis[: j + 1]
        v = v - active.T @ (active.conj() @ v)
        beta = float(np.linalg.norm(v))
        alphas.append(alpha)

        if j == 0:
            theta, ritz = alpha, np.array([1.0])
        else:
            values, vectors = linalg.eigh_tridiagonal(
                np.array(alphas), np.array(betas), select="i", select_range=(j, j)
            )
            theta, ritz = float(values[0]), vectors[:, 0]

        residual = beta * abs(ritz[-1]) / max(theta, np.finfo(float).tiny)
        if residual <= tol or beta <= np.finfo(float).eps * max(theta, 1.0):
            vector = basis[: j + 1].T @ ritz
            return theta, vector, True, residual, j + 1
        betas.append(beta)
        basis[j + 1] = v / beta

    vector = basis[:max_iter].T @ ritz
    return theta, vector, False, residual, max_iter


def sigma_min(
    op: BandedComplexOperator,
    pair: NormPairName | NormPair = "L2",
    *,
    method: str = "auto",
    tol: float = LANCZOS_TOL,
    max_iter: int = LANCZOS_MAX_ITER,
    seed: int = LANCZOS_SEED,
    return_vector: bool = False,
) -> SigmaEstimate:
    """sigma_min(P T Q^{-1}) for the already shifted operator T = op."""
    # Preconditions
    assert method in ("auto", "lanczos", "dense"), f"unknown method {method!r}"
    assert max_iter >= 1, f"max_iter must be >= 1, not {max_iter}"

    norm_pair = pair if isinstance(pair, NormPair) else NormPair(pair, op.grid)
    if method == "dense" or (method == "auto" and op.n < DENSE_SVD_LIMIT):
        return _sigma_min_dense(op, norm_pair, return_vector)

    lu = op.lu

    def apply_m(v: np.ndarray) -> np.ndarray:
        x = lu.solve(norm_pair.q_adjoint(v), trans="H")
        x = norm_pair.middle(x)
        return norm_pair.q(lu.solve(x))

    rng = np.random.default_rng(seed)
    theta, ritz, converged, residual, iterations = _lanczos_largest(
        apply_m, op.n, rng, tol, min(max_iter, op.n)
    )
    if not converged:
        logger.warning(
            "Lanczos did not converge for k=%d s=%g (residual %.2e after %d steps)",
            op.k,
            op.shift_imag,
            residual,
            iterations,
        )
    vector = None
    if return_vector:
        vector = norm_pair.q_inverse(ritz / np.linalg.norm(ritz))
    value = 1.0 / np.sqrt(theta)

    # Postconditions
    assert np.isfinite(value) and value >= 0.0, f"sigma_min must be finite, got {value}"
    return SigmaEstimate(
        value=float(value),
        converged=converged,
        residual=float(residual),
        iterations=iterations,
        method="lanczos",
        vector=vector,
    )


def _sigma_min_dense(
    op: BandedComplexOperator, pair: NormPair, return_vector: bool
) -> SigmaEstimate:
    p, q = pair.dense_factors()
    pt = p @ op.to_dense()
    # A = P T Q^{-1}, solved from A Q = P T
    a = np.linalg.solve(q.T, pt.T).T
    if return_vector:
        _, s, vh = linalg.svd(a)
        vector = pair.q_inverse(vh[-1].conj())
        value = float(s[-1])
    else:
        value = float(linalg.svdvals(a)[-1])
        vector = None
    return SigmaEstimate(
        value=value, converged=True, residual=0.0, iterations=0, method="dense", vector=vector
    )
