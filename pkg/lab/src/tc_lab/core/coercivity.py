"""Quadratic-form audit of the mode operators on random smooth test functions."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from tc_shared.errors import OperatorError
from tc_shared.grid import BumpFamily, NormKind, bump_family
from tc_shared.operators import BandedComplexOperator
from tc_shared.physics.lab_defaults import LANCZOS_SEED
from tc_shared.physics.protocol import CoercivityReport

logger = logging.getLogger(__name__)


def ground_state_log_derivative(r: np.ndarray) -> np.ndarray:
    """h'/h for h = r^{3/2} e^{-r^2/8}."""
    return 1.5 / r - r / 4.0


def weighted_gradient(bump: BumpFamily, r: np.ndarray) -> np.ndarray:
    """h d/dr (w / h), from the closed-form derivative of w."""
    return bump.derivative(r) - ground_state_log_derivative(r) * bump.values(r)


@dataclass(frozen=True)
class SampleForms:
    """Quadratic forms of one test function."""

    c0: float
    accretivity: float
    identity_residual: float
    identity_relative: float
    l2_ratio: float
    h1_ratio: float


def identity_sides(op: BandedComplexOperator, bump: BumpFamily) -> tuple[float, float]:
    """Both sides of Re<L_k w, w/r^2> = ||r^{-1} h (w/h)'||^2 + (k^2 - 1)||w/r^2||^2.

    The left side uses the assembled matrix, the right side the closed-form
    derivative of the bump, both under the grid quadrature.
    """
    grid = op.grid
    r = grid.nodes
    w = bump.values(r)
    left = float(np.real(grid.inner(w / r**2, op.matvec(w))))
    gradient = grid.norm_of(weighted_gradient(bump, r) / r, NormKind.L2) ** 2
    right = gradient + (op.k**2 - 1) * grid.norm_of(w / r**2, NormKind.L2) ** 2
    return left, right


def _forms(op: BandedComplexOperator, bump: BumpFamily) -> SampleForms | None:
    grid = op.grid
    r = grid.nodes
    w = bump.values(r)
    if not np.any(w):
        return None

    # F = op w, without any resolvent shift beyond the one already in op
    lw = op.matvec(w)
    real_part = float(np.real(grid.inner(w, lw)))
    l2_sq = grid.norm_of(w, NormKind.L2) ** 2
    dirichlet = grid.stiffness_form(w)
    confinement = float(np.sum(grid.weights * (op.k**2 / r**2 + r**2) * np.abs(w) ** 2))
    left, right = identity_sides(op, bump)
    f_norm = grid.norm_of(lw, NormKind.L2)
    return SampleForms(
        c0=real_part / (dirichlet + confinement),
        accretivity=real_part / l2_sq,
        identity_residual=abs(left - right),
        identity_relative=abs(left - right) / max(abs(right), np.finfo(float).tiny),
        l2_ratio=abs(op.k) * np.sqrt(l2_sq) / f_norm,
        h1_ratio=np.sqrt(abs(op.k)) * grid.norm_of(w, NormKind.H1) / f_norm,
    )


def coercivity_audit(
    op: BandedComplexOperator,
    samples,
    *,
    rng: np.random.Generator | None = None,
    workers: int = 1,
) -> CoercivityReport:
    """Record the coercivity quotients of L_k over random bump functions.

    `samples` is a count of random bump families or an explicit list of
    BumpFamily objects. Zero functions are skipped.

    The bounded ratios |k| ||w|| / ||F|| and |k|^{1/2} ||w||_H1 / ||F|| use the
    unshifted F = L_k w of `op`. Pass an operator from `with_shift` to measure
    them for L_k - i s instead.
    """
    if op.k == 0:
        raise OperatorError("coercivity audit needs |k| >= 1")

    if isinstance(samples, int):
        # Preconditions
        assert samples >= 0, f"samples must be >= 0, not {samples}"
        generator = rng or np.random.default_rng(LANCZOS_SEED)
        bumps = [bump_family(op.grid, generator) for _ in range(samples)]
    else:
        bumps = list(samples)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _forms(op, b), bumps))
    else:
        results = [_forms(op, b) for b in bumps]
    forms = [f for f in results if f is not None]
    skipped = len(results) - len(forms)

    def extreme(attr: str, pick) -> float:
        return float(pick(getattr(f, attr) for f in forms)) if forms else 0.0

    report = CoercivityReport(
        k=op.k,
        B=float(op.B),
        samples=len(forms),
        skipped=skipped,
        c0_min=extreme("c0", min),
        accretivity_min=extreme("accretivity", min),
        identity_residual_max=extreme("identity_residual", max),
        identity_relative_max=extreme("identity_relative", max),
        l2_ratio_max=extreme("l2_ratio", max),
        h1_ratio_max=extreme("h1_ratio", max),
    )
    if forms and report["accretivity_min"] < 0.0:
        logger.warning("negative Re<Lw, w> observed for k=%d B=%g", op.k, op.B)
    logger.info(
        "coercivity k=%d B=%g: c0=%.4g identity residual=%.3g over %d samples",
        op.k,
        op.B,
        report["c0_min"],
        report["identity_residual_max"],
        report["samples"],
    )
    return report
