"""Battery of verification audits behind `verify`.

Each audit returns an AuditOutcome with a pass flag and the numbers it was
judged on. An audit that raises one of the lab errors is reported as failed
with the error text instead of aborting the battery.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np

from tc_shared.errors import (
    ConfigurationError,
    OperatorError,
    ResolutionError,
    RiccatiCrossingError,
    SolverError,
)
from tc_shared.grid import NormKind, build_grid, compact_bump, ring_profile
from tc_shared.operators import assemble_Lk, ou_spectrum_check
from tc_shared.physics import AUDIT_PROFILES, AuditProfile, FlowParams
from tc_shared.physics.lab_defaults import DEFAULT_K_TRUNCATION, DT_PER_PSI, LANCZOS_SEED
from tc_shared.physics.protocol import AuditOutcome, ScalingFit, ScanResult

from ..core.coercivity import coercivity_audit
from ..core.energy import interaction_inequality_audit, translate_physical
from ..core.nonlinear import ModeState, SimulationConfig, integrate, interaction_pairing
from ..core.resolvent import ScanConfig, pseudospectral_bound, psi_scaling, sharpness_witness
from ..core.semigroup import (
    gearhart_pruess_check,
    propagate_linear,
    ring_decay_fit,
    zero_mode_passivity,
)
from ..core.stream import StreamSolver, elliptic_estimate_audit
from .oracles import (
    crossing_radius,
    factorization_identities,
    interpolation_checks,
    manufactured_error,
    observed_order,
    pointwise_factorization_residual,
    riccati_g,
    stream_oracle_error,
)
from .sweep import global_decay_check

LAB_ERRORS = (
    ConfigurationError,
    OperatorError,
    ResolutionError,
    RiccatiCrossingError,
    SolverError,
)

SPECTRUM_TOL: float = 1e-2
FACTORIZATION_ORDER: float = 1.8
GROUND_STATE_TOL: float = 1e-2
RICCATI_TOL: float = 1e-6
POWER_LAW_TOL: float = 1e-10
CROSSING_RTOL: float = 1e-2
GREEN_TOL: float = 1e-6
GREEN_MODES: tuple[int, ...] = (1, 2, 5)
MANUFACTURED_TOL: float = 1e-3
ELLIPTIC_MARGIN_FLOOR: float = -0.05
PASSIVITY_SLACK: float = 1e-2
MOMENT_TOL: float = 1e-8
WEIGHT_CANCEL_TOL: float = 1e-10
LINEARIZATION_TOL: float = 1e-10
PAIRING_TOL: float = 1e-8
SHARPNESS_RADII: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
SHARPNESS_SPREAD: float = 10.0

# (k, B) pairs of the semigroup bound
GP_CASES: tuple[tuple[int, float], ...] = ((1, 1e3), (1, 1e4), (3, 1e3), (3, 1e4))
PSI_SCALING_B: tuple[float, ...] = (1e2, 1e3, 1e4, 1e5)
PSI_SLOPE: float = 1.0 / 3.0
PSI_SLOPE_TOL: float = 0.05
DECAY_RATIO_B: tuple[float, float] = (1e3, 1e4)
DECAY_RATIO_TOL: float = 0.2
GLOBAL_DECAY_B: float = 1e3
GLOBAL_DECAY_AMPLITUDES: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)

# (A, B) of the reduced Riccati cases and the window start
RICCATI_CASES: tuple[tuple[float, float], ...] = ((2.0, -3.0), (2.0, -2.0))
RICCATI_POWER_LAW: tuple[float, float] = (1.0, 1.0)
RICCATI_R_START: float = 0.1
RICCATI_R_END: float = 10.0
RICCATI_GRID_N: int = 2048


def failed(name: str, error: Exception) -> AuditOutcome:
    return AuditOutcome(name=name, passed=False, details={"error": str(error)})


class AuditBattery:
    """Runs the verification audits of one profile ("quick" or "full")."""

    def __init__(
        self,
        profile: str = "quick",
        *,
        seed: int = LANCZOS_SEED,
        workers: int = 1,
        logger: logging.Logger | None = None,
    ) -> None:
        if profile not in AUDIT_PROFILES:
            raise ConfigurationError(f"unknown audit profile {profile!r}, pick one of {sorted(AUDIT_PROFILES)}")
        self.profile_name = profile
        self.profile: AuditProfile = AUDIT_PROFILES[profile]
        self.seed = seed
        self.workers = workers
        self._log = logger or logging.getLogger(__name__)
        self.grid = build_grid(self.profile["n"], self.profile["r_max"])
        self._scans: dict[tuple[int, float], ScanResult] = {}
        self._rates: dict[tuple[int, float], float] = {}
        self._scaling: tuple[list[ScanResult], ScalingFit] | None = None

    def _rng(self, offset: int) -> np.random.Generator:
        # Every audit draws from its own stream so the battery order does not matter
        return np.random.default_rng(self.seed + offset)

    def _scan_config(self) -> ScanConfig:
        return ScanConfig(points=self.profile["scan_points"], workers=self.workers, seed=self.seed)

    def _psi(self, k: int, B: float) -> float:
        """Psi(L_k) on the profile grid, scanned once per (k, B)."""
        key = (k, float(B))
        if key not in self._scans:
            op = assemble_Lk(self.grid, k, FlowParams.from_B(B))
            self._scans[key] = pseudospectral_bound(op, self._scan_config(), logger=self._log)
        return self._scans[key]["psi"]

    def _ring_rate(self, k: int, B: float) -> float:
        key = (k, float(B))
        if key not in self._rates:
            op = assemble_Lk(self.grid, k, FlowParams.from_B(B))
            self._rates[key] = ring_decay_fit(op, self._psi(k, B))["rate"]
        return self._rates[key]

    def _psi_scaling(self) -> tuple[list[ScanResult], ScalingFit]:
        if self._scaling is None:
            grid = build_grid(self.profile["scaling_n"], self.profile["r_max"])
            self._scaling = psi_scaling(grid, 1, PSI_SCALING_B, self._scan_config())
        return self._scaling

    def audits(self) -> list[tuple[str, Callable[[], AuditOutcome]]]:
        return [
            ("ou-spectrum", self.ou_spectrum),
            ("coercivity", self.coercivity),
            ("factorization", self.factorization),
            ("interpolation", self.interpolation),
            ("riccati", self.riccati),
            ("stream-oracle", self.stream_oracle),
            ("psi-scaling", self.psi_scaling),
            ("gearhart-pruess", self.gearhart_pruess),
            ("decay-scaling", self.decay_scaling),
            ("sharpness", self.sharpness),
            ("zero-mode-passivity", self.zero_mode),
            ("interaction-inequality", self.interaction_inequality),
            ("elliptic-estimates", self.elliptic),
            ("physical-translation", self.physical_translation),
            ("linearization-limit", self.linearization),
            ("global-decay", self.global_decay),
        ]

    def run(self) -> list[AuditOutcome]:
        outcomes: list[AuditOutcome] = []
        for name, audit in self.audits():
            try:
                outcome = audit()
            except LAB_ERRORS as exc:
                self._log.error("audit %s raised: %s", name, exc)
                outcome = failed(name, exc)
            level = logging.INFO if outcome["passed"] else logging.WARNING
            self._log.log(level, "audit %s: %s", name, "passed" if outcome["passed"] else "FAILED")
            outcomes.append(outcome)
        passed = sum(o["passed"] for o in outcomes)
        self._log.info("%d of %d audits passed (profile %s)", passed, len(outcomes), self.profile_name)
        return outcomes

    def ou_spectrum(self) -> AuditOutcome:
        checks = ou_spectrum_check(self.grid, (1, 2, 3))
        worst = max(c["max_error"] for c in checks)
        details: dict[str, float | int | str | bool] = {
            f"k{c['k']}_error": c["max_error"] for c in checks
        }
        details["max_error"] = worst
        return AuditOutcome(name="ou-spectrum", passed=worst < SPECTRUM_TOL, details=details)

    def coercivity(self) -> AuditOutcome:
        details: dict[str, float | int | str | bool] = {}
        passed = True
        for k in (1, 2):
            op = assemble_Lk(self.grid, k, FlowParams.from_B(1e3))
            report = coercivity_audit(
                op, self.profile["samples"], rng=self._rng(10 + k), workers=self.workers
            )
            details[f"k{k}_accretivity_min"] = report["accretivity_min"]
            details[f"k{k}_identity_relative_max"] = report["identity_relative_max"]
            details[f"k{k}_c0_min"] = report["c0_min"]
            passed = passed and report["accretivity_min"] >= 0.0
            passed = passed and report["identity_relative_max"] < self.profile["identity_rel_tol"]
        return AuditOutcome(name="coercivity", passed=passed, details=details)

    def factorization(self) -> AuditOutcome:
        coarse = self.grid
        fine = build_grid(2 * coarse.n, coarse.r_max)
        report = factorization_identities(coarse, self.profile["samples"], rng=self._rng(20))
        bumps = [compact_bump(4.0, 2.0), compact_bump(7.0, 3.0)]
        pointwise = [
            observed_order(
                pointwise_factorization_residual(coarse, b),
                pointwise_factorization_residual(fine, b),
            )
            for b in bumps
        ]
        quadratic = [
            observed_order(
                factorization_identities(coarse, [b])["quadratic_residual_max"],
                factorization_identities(fine, [b])["quadratic_residual_max"],
            )
            for b in bumps
        ]
        fine_ground = factorization_identities(fine, [])["ground_state_residual"]
        ground_order = observed_order(report["ground_state_residual"], fine_ground)
        order = min(*pointwise, *quadratic, ground_order)
        details: dict[str, float | int | str | bool] = {
            "pointwise_residual_max": report["pointwise_residual_max"],
            "quadratic_relative_max": report["quadratic_relative_max"],
            "ground_state_residual": report["ground_state_residual"],
            "pointwise_order_min": min(pointwise),
            "quadratic_order_min": min(quadratic),
            "ground_state_order": ground_order,
        }
        passed = order >= FACTORIZATION_ORDER and report["ground_state_residual"] < GROUND_STATE_TOL
        return AuditOutcome(name="factorization", passed=passed, details=details)

    def interpolation(self) -> AuditOutcome:
        report = interpolation_checks(
            self.grid, self.profile["interpolation_samples"], rng=self._rng(30)
        )
        details: dict[str, float | int | str | bool] = {
            "samples": report["samples"],
            "a2_ratio_max": report["a2_ratio_max"],
        }
        details.update({f"extremal_{k}": v for k, v in report["extremal_ratios"].items()})
        details.update({f"weighted_{k}": v for k, v in report["a3_constants"].items()})
        return AuditOutcome(name="interpolation", passed=report["a2_passed"], details=details)

    def riccati(self) -> AuditOutcome:
        grid = build_grid(RICCATI_GRID_N, RICCATI_R_END)
        details: dict[str, float | int | str | bool] = {}
        passed = True
        for A, B in RICCATI_CASES:
            tag = f"A{A:g}_B{B:g}"
            expected = crossing_radius(A, B, RICCATI_R_START)
            details[f"{tag}_crossing_expected"] = expected
            window = riccati_g(A, B, grid, r_lo=RICCATI_R_START, r_hi=0.9 * expected)
            details[f"{tag}_residual"] = window.residual
            passed = passed and window.residual < RICCATI_TOL
            try:
                riccati_g(A, B, grid, r_lo=RICCATI_R_START, r_hi=RICCATI_R_END)
            except RiccatiCrossingError as exc:
                details[f"{tag}_crossing_found"] = exc.crossing_r
                passed = passed and math.isclose(exc.crossing_r, expected, rel_tol=CROSSING_RTOL)
            else:
                details[f"{tag}_crossing_found"] = "none"
                passed = False

        A, B = RICCATI_POWER_LAW
        power = riccati_g(A, B, grid, r_lo=RICCATI_R_START, r_hi=RICCATI_R_END)
        # u = 3/2 is an equilibrium, so g = r / r_start
        power_error = float(np.max(np.abs(power.g - power.radii / RICCATI_R_START)) / np.max(power.g))
        details["power_law_residual"] = power.residual
        details["power_law_error"] = power_error
        passed = passed and power.residual < POWER_LAW_TOL and power_error < POWER_LAW_TOL
        return AuditOutcome(name="riccati", passed=passed, details=details)

    def stream_oracle(self) -> AuditOutcome:
        grid = build_grid(self.profile["green_n"], self.profile["r_max"])
        solver = StreamSolver(grid)
        details: dict[str, float | int | str | bool] = {}
        passed = True
        for k in GREEN_MODES:
            error = stream_oracle_error(grid, k, solver=solver)
            manufactured = manufactured_error(grid, k, solver=solver)
            details[f"k{k}_green_error"] = error
            details[f"k{k}_manufactured_error"] = manufactured
            passed = passed and error < GREEN_TOL and manufactured < MANUFACTURED_TOL
        return AuditOutcome(name="stream-oracle", passed=passed, details=details)

    def psi_scaling(self) -> AuditOutcome:
        scans, fit = self._psi_scaling()
        details: dict[str, float | int | str | bool] = {
            "slope": fit["slope"],
            "prefactor": fit["prefactor"],
            "residual": fit["residual"],
        }
        details.update({f"psi_B{scan['B']:g}": scan["psi"] for scan in scans})
        details["flagged_scans"] = sum(bool(scan["flags"]) for scan in scans)
        passed = abs(fit["slope"] - PSI_SLOPE) <= PSI_SLOPE_TOL
        return AuditOutcome(name="psi-scaling", passed=passed, details=details)

    def gearhart_pruess(self) -> AuditOutcome:
        details: dict[str, float | int | str | bool] = {}
        passed = True
        for index, (k, B) in enumerate(GP_CASES):
            op = assemble_Lk(self.grid, k, FlowParams.from_B(B))
            psi = self._psi(k, B)
            report = gearhart_pruess_check(
                op,
                psi,
                self.profile["trajectories"],
                rng=self._rng(40 + index),
                workers=self.workers,
            )
            tag = f"k{k}_B{B:g}"
            details[f"{tag}_psi"] = psi
            details[f"{tag}_fitted_rate"] = report["fit"]["rate"]
            details[f"{tag}_worst_ratio_to_bound"] = float(
                max(m / b for m, b in zip(report["max_ratio"], report["bound"], strict=True))
            )
            passed = passed and report["all_passed"]
        details["trajectories"] = self.profile["trajectories"]
        return AuditOutcome(name="gearhart-pruess", passed=passed, details=details)

    def decay_scaling(self) -> AuditOutcome:
        low, high = DECAY_RATIO_B
        rates = {B: self._ring_rate(1, B) for B in DECAY_RATIO_B}
        expected = (high / low) ** PSI_SLOPE
        ratio = rates[high] / rates[low]
        details: dict[str, float | int | str | bool] = {
            f"rate_B{B:g}": rate for B, rate in rates.items()
        }
        details["ratio"] = ratio
        details["expected_ratio"] = expected
        passed = abs(ratio / expected - 1.0) <= DECAY_RATIO_TOL
        return AuditOutcome(name="decay-scaling", passed=passed, details=details)

    def sharpness(self) -> AuditOutcome:
        _, fit = self._psi_scaling()
        details: dict[str, float | int | str | bool] = {}
        ratios: list[float] = []
        sandwiched = True
        for r0 in SHARPNESS_RADII:
            r_max = r0 + 2.0
            grid = build_grid(int(math.ceil(64 * r0 * r_max)), r_max)
            _, ratio = sharpness_witness(r0, grid)
            # beta^{1/3} = r0^2 for beta = r0^6
            beta_third = r0**2
            psi = fit["prefactor"] * (r0**6) ** fit["slope"]
            details[f"r0_{r0:g}"] = ratio / beta_third
            details[f"r0_{r0:g}_psi"] = psi / beta_third
            ratios.append(ratio / beta_third)
            sandwiched = sandwiched and ratio >= psi
        spread = max(ratios) / min(ratios)
        details["spread"] = spread
        details["sandwiched"] = sandwiched
        return AuditOutcome(
            name="sharpness", passed=spread < SHARPNESS_SPREAD and sandwiched, details=details
        )

    def zero_mode(self) -> AuditOutcome:
        w0 = ring_profile(self.grid, 0)
        plain = zero_mode_passivity(w0, 5.0, 1e-2)
        projected = zero_mode_passivity(w0, 5.0, 1e-2, project_out_ground_state=True)
        details: dict[str, float | int | str | bool] = {
            "l2_growth": plain["l2_growth"],
            "projected_x_initial": projected["x_initial"],
            "projected_x_final": projected["x_final"],
        }
        passed = plain["l2_growth"] <= 1.0 + PASSIVITY_SLACK
        passed = passed and projected["x_final"] < projected["x_initial"]
        return AuditOutcome(name="zero-mode-passivity", passed=passed, details=details)

    def interaction_inequality(self) -> AuditOutcome:
        report = interaction_inequality_audit(16)
        return AuditOutcome(
            name="interaction-inequality",
            passed=report["violations"] == 0,
            details=dict(report),
        )

    def elliptic(self) -> AuditOutcome:
        details: dict[str, float | int | str | bool] = {}
        passed = True
        solver = StreamSolver(self.grid)
        for k, beta in ((1, 0.0), (2, 1.0)):
            report = elliptic_estimate_audit(
                self.grid, k, beta, self.profile["samples"], rng=self._rng(50 + k), solver=solver
            )
            tag = f"k{k}_beta{beta:g}"
            details[f"{tag}_margin_min"] = report["coercivity_margin_min"]
            details.update({f"{tag}_{name}": v for name, v in report["constants"].items()})
            passed = passed and report["coercivity_margin_min"] >= ELLIPTIC_MARGIN_FLOOR
        return AuditOutcome(name="elliptic-estimates", passed=passed, details=details)

    def physical_translation(self) -> AuditOutcome:
        params = FlowParams.from_B(1e3)
        state = ModeState.from_profiles(
            self.grid,
            params,
            {0: ring_profile(self.grid, 0), 1: ring_profile(self.grid, 1), 2: ring_profile(self.grid, 2)},
            K=2,
        )
        report = translate_physical(state)
        l2 = state.norms()
        cancel = max(
            abs(report["m_norms"][str(k)] - l2[k]) / max(l2[k], np.finfo(float).tiny)
            for k in range(state.K + 1)
        )
        moments = report["moments"]
        details: dict[str, float | int | str | bool] = {
            "weight_cancellation": float(cancel),
            "moment_r3_error": moments["r3_error"],
            "moment_r1_error": moments["r1_error"],
            "l1_direct": report["l1_direct"],
            "l1_bound": report["l1_bound"],
        }
        passed = (
            cancel < WEIGHT_CANCEL_TOL
            and moments["r3_error"] < MOMENT_TOL
            and moments["r1_error"] < MOMENT_TOL
            and report["l1_direct"] <= report["l1_bound"]
        )
        return AuditOutcome(name="physical-translation", passed=passed, details=details)

    def linearization(self) -> AuditOutcome:
        grid = build_grid(128, self.profile["r_max"])
        params = FlowParams.from_B(1e3)
        tau_end, dt = 0.05, 1e-3
        init = ModeState.ring(grid, params, 1e-8, modes=(1,), K=2)
        trajectory = integrate(init, SimulationConfig(K=2, dt=dt, tau_end=tau_end))
        linear = propagate_linear(assemble_Lk(grid, 1, params), init.mode(1), tau_end, dt)
        final = linear.states[-1]
        gap = grid.norm_of(trajectory.final.mode(1).values - final, NormKind.L2) / grid.norm_of(
            final, NormKind.L2
        )
        pairing = interaction_pairing(ModeState.ring(grid, params, 1.0, modes=(1, 2), K=2))
        pairing_scale = max(abs(pairing["direct"]), 1.0)
        details: dict[str, float | int | str | bool] = {
            "relative_gap": float(gap),
            "pairing_difference": pairing["difference"] / pairing_scale,
        }
        passed = gap < LINEARIZATION_TOL and pairing["difference"] / pairing_scale < PAIRING_TOL
        return AuditOutcome(name="linearization-limit", passed=passed, details=details)

    def global_decay(self) -> AuditOutcome:
        psi = self._psi(1, GLOBAL_DECAY_B)
        report = global_decay_check(
            self.grid,
            GLOBAL_DECAY_B,
            GLOBAL_DECAY_AMPLITUDES,
            rate=self._ring_rate(1, GLOBAL_DECAY_B),
            # nonlinear runs take ten times the linear step
            dt=10.0 * DT_PER_PSI / psi,
            K=DEFAULT_K_TRUNCATION,
            logger=self._log,
        )
        details: dict[str, float | int | str | bool] = {
            key: value for key, value in report.items() if key != "passed"
        }
        return AuditOutcome(name="global-decay", passed=report["passed"], details=details)


def run_audit_battery(
    profile: str = "quick",
    *,
    seed: int = LANCZOS_SEED,
    workers: int = 1,
    logger: logging.Logger | None = None,
) -> list[AuditOutcome]:
    return AuditBattery(profile, seed=seed, workers=workers, logger=logger).run()
