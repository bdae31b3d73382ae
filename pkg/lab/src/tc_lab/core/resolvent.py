"""Resolvent norms along the imaginary axis and the pseudospectral bound.

Psi(L_k) = inf over real s of sigma_min(L_k - i s). The scan evaluates
sigma_min on a coarse shift set clustered toward s = 0 on a log scale, then
refines the lowest local minima by golden-section search.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from tc_shared.errors import ConfigurationError, ResolutionError
from tc_shared.grid import GridFunction, NormKind, RadialGrid, bump_family
from tc_shared.operators import (
    BandedComplexOperator,
    assemble_Lk,
    potential,
    resolvent_matrix,
)
from tc_shared.physics import FlowParams
from tc_shared.physics.lab_defaults import (
    LANCZOS_SEED,
    REFINE_MINIMA,
    REFINE_RTOL,
    SCAN_LOG_FRACTION,
    SCAN_POINTS,
    SCAN_SPAN_FACTOR,
    SHARPNESS_MIN_NODES,
)
from tc_shared.physics.protocol import (
    NormPairName,
    ScalingFit,
    ScanResult,
    ShiftedResolventReport,
)

from .singular import NormPair, SigmaEstimate, sigma_min

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScanConfig:
    """Knobs of an imaginary-axis resolvent scan.

    Attributes:
        points: coarse shifts on the positive and negative half-axes together
            (s = 0 is always added)
        log_fraction: share of positive shifts placed log-spaced in
            [scale / r_max^2, scale], the rest linear up to s_max
        span_factor: s_max = span_factor * max(|beta_k|, 1)
        refine_rtol: relative x-tolerance of the golden-section refinement
        refine_minima: number of lowest coarse local minima refined
        norm_pair: norms measuring (L_k - i s) w and w
        c2: real shift constant for the H^{-1} pairs, T = L_k - i s - c2 |beta_k|^{1/3}
        method: "auto" (dense below the size limit), "lanczos" or "dense"
        extra_shifts: additional shifts evaluated with the coarse set
        workers: thread count for the coarse evaluations
        seed: Lanczos start-vector seed, shared by every shift
    """

    points: int = SCAN_POINTS
    log_fraction: float = SCAN_LOG_FRACTION
    span_factor: float = SCAN_SPAN_FACTOR
    refine_rtol: float = REFINE_RTOL
    refine_minima: int = REFINE_MINIMA
    norm_pair: NormPairName = "L2"
    c2: float = 0.0
    method: str = "auto"
    extra_shifts: tuple[float, ...] = field(default_factory=tuple)
    workers: int = 1
    seed: int = LANCZOS_SEED

    def __post_init__(self) -> None:
        if self.points < 8:
            raise ConfigurationError(f"scan needs at least 8 points, not {self.points}")
        if not 0.0 <= self.log_fraction <= 1.0:
            raise ConfigurationError(f"log_fraction must lie in [0, 1], not {self.log_fraction}")
        if self.span_factor < 1.0:
            raise ConfigurationError(f"span_factor must be >= 1, not {self.span_factor}")
        if self.c2 < 0.0:
            raise ConfigurationError(f"c2 must be >= 0, not {self.c2}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, not {self.workers}")


def coarse_shifts(op: BandedComplexOperator, config: ScanConfig) -> np.ndarray:
    """Sorted coarse shift set: mirrored log+linear positives and s = 0."""
    beta = abs(op.k * op.B)
    scale = max(beta, 1.0)
    s_max = config.span_factor * scale
    half = config.points // 2
    n_log = int(round(half * config.log_fraction))
    n_lin = half - n_log

    positives = []
    if n_log > 0:
        lo = scale / op.grid.r_max**2
        positives.append(np.logspace(math.log10(lo), math.log10(scale), n_log))
    if n_lin > 0:
        start = scale if n_log > 0 else 0.0
        positives.append(np.linspace(start, s_max, n_lin + 1)[1:])
    pos = np.concatenate(positives) if positives else np.empty(0)
    shifts = np.concatenate([-pos, [0.0], pos, np.asarray(config.extra_shifts, float)])
    return np.unique(shifts)


def _shifted(op: BandedComplexOperator, s: float, pair: NormPair, c2: float):
    shifted = resolvent_matrix(op, s)
    if pair.shifted and c2 > 0.0:
        shifted = shifted.with_shift(s_real=c2 * abs(op.k * op.B) ** (1.0 / 3.0))
    return shifted


def resolvent_norm_at(
    op: BandedComplexOperator,
    s: float,
    norm_pair: NormPairName = "L2",
    *,
    c2: float = 0.0,
    method: str = "auto",
    seed: int = LANCZOS_SEED,
    return_vector: bool = False,
) -> SigmaEstimate:
    """sigma_min(L_k - i s) in the given norm pair (inverse resolvent norm)."""
    pair = NormPair(norm_pair, op.grid)
    estimate = sigma_min(
        _shifted(op, s, pair, c2),
        pair,
        method=method,
        seed=seed,
        return_vector=return_vector,
    )
    logger.debug(
        "sigma_min k=%d s=%g pair=%s -> %.6g (%s)",
        op.k,
        s,
        norm_pair,
        estimate.value,
        estimate.method,
    )
    return estimate


def _local_minima(values: np.ndarray) -> list[int]:
    idx = [
        i
        for i in range(1, len(values) - 1)
        if values[i] <= values[i - 1] and values[i] <= values[i + 1]
    ]
    return sorted(idx, key=lambda i: values[i])


def pseudospectral_bound(
    op: BandedComplexOperator,
    scan_config: ScanConfig | None = None,
    *,
    logger: logging.Logger | None = None,
) -> ScanResult:
    """Coarse scan plus golden-section refinement of min_s sigma_min(L_k - i s)."""
    config = scan_config or ScanConfig()
    log = logger or logging.getLogger(__name__)
    pair = NormPair(config.norm_pair, op.grid)
    evaluated: dict[float, SigmaEstimate] = {}

    def evaluate(s: float) -> SigmaEstimate:
        return sigma_min(
            _shifted(op, s, pair, config.c2), pair, method=config.method, seed=config.seed
        )

    shifts = coarse_shifts(op, config)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            estimates = list(pool.map(evaluate, shifts))
    else:
        estimates = [evaluate(s) for s in shifts]
    for s, est in zip(shifts, estimates, strict=True):
        evaluated[float(s)] = est
    coarse = np.array([est.value for est in estimates])

    flags: list[str] = []
    best = int(np.argmin(coarse))
    if best in (0, len(coarse) - 1):
        flags.append("unresolved-minimum")
        log.warning(
            "scan minimum for k=%d B=%g sits on the scan boundary s=%g",
            op.k,
            op.B,
            shifts[best],
        )

    def objective(s: float) -> float:
        key = float(s)
        if key not in evaluated:
            evaluated[key] = evaluate(key)
        return evaluated[key].value

    minima = _local_minima(coarse)[: config.refine_minima]
    for i in minima:
        a, b, c = float(shifts[i - 1]), float(shifts[i]), float(shifts[i + 1])
        xtol = config.refine_rtol
        try:
            minimize_scalar(
                objective, bracket=(a, b, c), method="golden", options={"xtol": xtol}
            )
        except ValueError:
            minimize_scalar(
                objective,
                bounds=(a, c),
                method="bounded",
                options={"xatol": xtol * max(abs(b), 1.0)},
            )

    ordered = sorted(evaluated)
    sigma = [evaluated[s].value for s in ordered]
    psi_index = int(np.argmin(sigma))
    psi = float(sigma[psi_index])
    # Flag only an unconverged minimizer or bracketing shift
    near = ordered[max(psi_index - 1, 0) : psi_index + 2]
    if any(not evaluated[s].converged for s in near):
        flags.append("lanczos-unconverged")
    elif any(not evaluated[s].converged for s in ordered):
        log.debug(
            "k=%d B=%g: %d shifts away from the minimum hit the Lanczos budget",
            op.k,
            op.B,
            sum(not evaluated[s].converged for s in ordered),
        )

    # Postconditions
    assert psi == min(sigma), "psi must be the minimum over every evaluated shift"
    assert all(v >= 0.0 for v in sigma), "inverse resolvent norms must be >= 0"

    log.info(
        "scan k=%d B=%g pair=%s psi=%.6g at s=%.6g (%d shifts)",
        op.k,
        op.B,
        config.norm_pair,
        psi,
        ordered[psi_index],
        len(ordered),
    )
    return ScanResult(
        k=op.k,
        B=float(op.B),
        norm_pair=config.norm_pair,
        shifts=[float(s) for s in ordered],
        sigma_min=[float(v) for v in sigma],
        psi=psi,
        psi_shift=float(ordered[psi_index]),
        refinement_depth=len(minima),
        flags=flags,
        grid=op.grid.describe(),
    )


def scaling_fit(x_values, y_values) -> ScalingFit:
    """Least-squares fit of log y = log C + slope log x."""
    x = np.asarray(x_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if len(x) < 2 or np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ConfigurationError("scaling fit needs at least two positive (x, y) pairs")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    fitted = intercept + slope * np.log(x)
    residual = float(np.sqrt(np.mean((np.log(y) - fitted) ** 2)))
    return ScalingFit(
        slope=float(slope),
        prefactor=float(np.exp(intercept)),
        residual=residual,
        x=[float(v) for v in x],
        y=[float(v) for v in y],
    )


def psi_scaling(
    grid: RadialGrid,
    k: int,
    B_values,
    scan_config: ScanConfig | None = None,
) -> tuple[list[ScanResult], ScalingFit]:
    """Scan each B and fit Psi against |k B|."""
    scans = [
        pseudospectral_bound(assemble_Lk(grid, k, FlowParams.from_B(B)), scan_config)
        for B in B_values
    ]
    fit = scaling_fit([abs(k * B) for B in B_values], [scan["psi"] for scan in scans])
    logger.info("Psi scaling k=%d slope=%.4f prefactor=%.4g", k, fit["slope"], fit["prefactor"])
    return scans, fit


def sharpness_witness(r0: float, grid: RadialGrid) -> tuple[GridFunction, float]:
    """Parabolic bump w = (r - r0)(r0 + 1/r0 - r) and ||(L_1 - i s) w|| / ||w||.

    The rotation is beta_1 = r0^6 and the shift s = beta_1 / r0^2 = r0^4, so the
    imaginary potential beta_1 / r^2 - s vanishes at the left end of the
    support. Since w'' = -2 on the open support, F = 2 + (V + i(beta_1/r^2 - s)) w
    there and zero outside; the ratio is evaluated from that closed form.
    """
    if not r0 >= 1.0:
        raise ConfigurationError(f"r0 must be >= 1, not {r0}")
    right = r0 + 1.0 / r0
    if right >= grid.r_max:
        raise ConfigurationError(f"support [{r0:g}, {right:g}] must end before r_max={grid.r_max:g}")

    r = grid.nodes
    inside = (r > r0) & (r < right)
    if np.count_nonzero(inside) < SHARPNESS_MIN_NODES:
        raise ResolutionError(
            f"insufficient grid resolution: {np.count_nonzero(inside)} nodes in the "
            f"support of width {1.0 / r0:.4g}, need {SHARPNESS_MIN_NODES}"
        )

    beta = r0**6
    shift = r0**4
    w = np.where(inside, (r - r0) * (right - r), 0.0)
    f = np.where(inside, 2.0 + (potential(grid, 1) + 1j * (beta / r**2 - shift)) * w, 0.0)
    bump = GridFunction(grid, w)
    ratio = grid.norm_of(f, NormKind.L2) / bump.norm(NormKind.L2)
    logger.debug("sharpness r0=%g ratio=%.6g ratio/beta^(1/3)=%.4g", r0, ratio, ratio / r0**2)
    return bump, float(ratio)


def _shifted_constants(
    op: BandedComplexOperator, shifted_op: BandedComplexOperator, w: np.ndarray
) -> tuple[float, float] | None:
    grid = op.grid
    if not np.any(w):
        return None
    beta = abs(op.k * op.B)
    f = shifted_op.matvec(w)
    r = grid.nodes
    lhs = grid.norm_of(w, NormKind.H1) + beta ** (1.0 / 6.0) * grid.norm_of(w, NormKind.L2)
    rhs = grid.norm_of(f, NormKind.HM1)
    lhs_w = grid.norm_of(w / r, NormKind.H1) + beta ** (1.0 / 6.0) * grid.norm_of(
        w / r, NormKind.L2
    )
    rhs_w = grid.norm_of(f / r, NormKind.HM1)
    return lhs / rhs, lhs_w / rhs_w


def shifted_resolvent_audit(
    op: BandedComplexOperator,
    c2: float,
    samples,
    *,
    lambdas=None,
    rng: np.random.Generator | None = None,
    with_pseudomodes: bool = True,
) -> ShiftedResolventReport:
    """Empirical constants of the shifted H1 -> H^{-1} resolvent bounds.

    For each lambda, T = L_k - i beta_k lambda - c2 |beta_k|^{1/3} and the
    recorded constants are

        (||w||_H1 + |beta_k|^{1/6} ||w||) / ||T w||_{H^-1}

    and the same with w / r and (T w) / r. `samples` is either a count of
    random bump functions or an explicit list of node-value arrays. With
    `with_pseudomodes`, the minimizing vectors of both shifted norm pairs at
    each lambda are added, which is where the constants are attained.
    """
    # Preconditions
    if not c2 > 0.0:
        raise ConfigurationError(f"c2 must be > 0, not {c2}")

    grid = op.grid
    beta = op.k * op.B
    if lambdas is None:
        lambdas = np.logspace(math.log10(1.0 / grid.r_max**2), 0.0, 8)
    lambdas = [float(lam) for lam in lambdas]

    if isinstance(samples, int):
        generator = rng or np.random.default_rng(LANCZOS_SEED)
        vectors = [bump_family(grid, generator).values(grid.nodes) for _ in range(samples)]
        explicit = False
    else:
        vectors = [np.asarray(getattr(w, "values", w)) for w in samples]
        explicit = True

    constant_max = 0.0
    weighted_max = 0.0
    skipped = 0
    count = 0
    for lam in lambdas:
        s = beta * lam
        shifted_op = resolvent_matrix(op, s).with_shift(
            s_real=c2 * abs(beta) ** (1.0 / 3.0)
        )
        candidates = list(vectors)
        if with_pseudomodes and not explicit:
            for pair in ("Hm1-shifted", "X-Hm1-shifted"):
                est = resolvent_norm_at(op, s, pair, c2=c2, return_vector=True)
                candidates.append(est.vector)
        for w in candidates:
            constants = _shifted_constants(op, shifted_op, w)
            if constants is None:
                skipped += 1
                continue
            count += 1
            constant_max = max(constant_max, constants[0])
            weighted_max = max(weighted_max, constants[1])

    logger.info(
        "shifted resolvent k=%d B=%g c2=%g: C=%.4g weighted C=%.4g over %d samples",
        op.k,
        op.B,
        c2,
        constant_max,
        weighted_max,
        count,
    )
    return ShiftedResolventReport(
        k=op.k,
        B=float(op.B),
        c2=float(c2),
        samples=count,
        skipped=skipped,
        constant_max=float(constant_max),
        weighted_constant_max=float(weighted_max),
        lambdas=lambdas,
    )


def bisect_c2(
    op: BandedComplexOperator,
    *,
    c_hi: float = 1.0,
    ratio_cap: float = 2.0,
    iterations: int = 8,
    scan_points: int = 32,
) -> float:
    """Largest c2 in (0, c_hi] found by bisection whose shifted H^{-1} bound
    constant stays within ratio_cap times the unshifted one.

    The constant is measured as 1 / Psi in the Hm1-shifted pair on a coarse
    scan. Returns 0.0 if no admissible positive c2 was found.
    """
    # Preconditions
    assert c_hi > 0.0, f"c_hi must be > 0, not {c_hi}"
    assert ratio_cap > 1.0, f"ratio_cap must be > 1, not {ratio_cap}"

    def psi_at(c2: float) -> float:
        config = ScanConfig(
            points=scan_points, norm_pair="Hm1-shifted", c2=c2, refine_minima=1
        )
        return pseudospectral_bound(op, config)["psi"]

    floor = psi_at(0.0) / ratio_cap
    if psi_at(c_hi) >= floor:
        return float(c_hi)
    lo, hi = 0.0, float(c_hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if psi_at(mid) >= floor:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        logger.warning("no admissible c2 found below %g for k=%d B=%g", c_hi, op.k, op.B)
    return float(lo)
