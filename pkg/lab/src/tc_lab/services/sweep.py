"""Amplitude sweeps locating the largest decaying ring perturbation per rotation ratio."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from tc_shared.errors import ConfigurationError
from tc_shared.grid import RadialGrid
from tc_shared.physics import FlowParams
from tc_shared.physics.lab_defaults import (
    BLOWUP_GROWTH,
    DECAY_FACTOR,
    DEFAULT_K_TRUNCATION,
    GLOBAL_DECAY_FRACTION,
    GLOBAL_DECAY_TAU_RATES,
    RING_CENTER,
    SWEEP_DT_SCALE,
    SWEEP_TAU_SCALE,
)
from tc_shared.physics.protocol import GlobalDecayReport, SweepRow, SweepTable, Verdict

from ..core.nonlinear import ModeState, NonlinearTrajectory, SimulationConfig, integrate, simulate
from ..core.resolvent import scaling_fit
from ..core.semigroup import fit_decay


@dataclass(frozen=True)
class SweepConfig:
    """Grid of (B, amplitude) runs and the rules classifying them.

    Attributes:
        B_values: rotation ratios, each |B| >= 1
        amplitudes: L2 size of the ring profile in every initial mode
        modes: initially populated modes
        tau_end, dt: fixed run length and step; when None they scale as
            40 / |B|^{1/3} and 0.05 / |B|^{1/3}
        decay_factor: a run decays once sum_k ||w_k|| (k != 0) falls below
            this fraction of its initial value
    """

    B_values: tuple[float, ...]
    amplitudes: tuple[float, ...]
    K: int = DEFAULT_K_TRUNCATION
    modes: tuple[int, ...] = (1,)
    r_c: float = RING_CENTER
    tau_end: float | None = None
    dt: float | None = None
    decay_factor: float = DECAY_FACTOR
    blowup_growth: float = BLOWUP_GROWTH
    stride: int = 10
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.B_values or not self.amplitudes:
            raise ConfigurationError("sweep needs at least one B and one amplitude")
        if any(abs(B) < 1.0 for B in self.B_values):
            raise ConfigurationError(f"every |B| must be >= 1, got {self.B_values}")
        if any(a < 0.0 for a in self.amplitudes):
            raise ConfigurationError(f"amplitudes must be >= 0, got {self.amplitudes}")
        if not 0.0 < self.decay_factor < 1.0:
            raise ConfigurationError(f"decay_factor must lie in (0, 1), not {self.decay_factor}")
        if any(k == 0 or abs(k) > self.K for k in self.modes):
            raise ConfigurationError(f"initial modes {self.modes} must be nonzero and within K={self.K}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, not {self.workers}")

    def run_length(self, B: float) -> tuple[float, float]:
        scale = abs(B) ** (1.0 / 3.0)
        tau_end = SWEEP_TAU_SCALE / scale if self.tau_end is None else self.tau_end
        dt = SWEEP_DT_SCALE / scale if self.dt is None else self.dt
        return tau_end, dt


def classify(
    trajectory: NonlinearTrajectory, decay_factor: float = DECAY_FACTOR
) -> tuple[Verdict, float]:
    """Verdict of one run and its final-to-initial nonzero-mode ratio."""
    norms = trajectory.nonzero_norms()
    initial = float(norms[0])
    if initial == 0.0:
        return "decaying", 0.0
    final_ratio = float(norms[-1] / initial) if np.isfinite(norms[-1]) else float("inf")
    if trajectory.blew_up:
        return "blow-up", final_ratio
    if final_ratio < decay_factor:
        return "decaying", final_ratio
    return "inconclusive", final_ratio


class ThresholdSweep:
    """Runs every (B, amplitude) cell of a SweepConfig and tabulates the verdicts."""

    def __init__(self, grid: RadialGrid, config: SweepConfig, logger: logging.Logger | None = None) -> None:
        self.grid = grid
        self.config = config
        self._log = logger or logging.getLogger(__name__)

    def run_cell(self, B: float, amplitude: float) -> SweepRow:
        config = self.config
        params = FlowParams.from_B(B)
        tau_end, dt = config.run_length(B)
        init = ModeState.ring(
            self.grid, params, amplitude, modes=config.modes, K=config.K, r_c=config.r_c
        )
        trajectory = integrate(
            init,
            SimulationConfig(
                K=config.K,
                dt=dt,
                tau_end=tau_end,
                stride=config.stride,
                blowup_growth=config.blowup_growth,
            ),
            logger=self._log,
        )
        verdict, final_ratio = classify(trajectory, config.decay_factor)
        rate = 0.0
        times = trajectory.times
        if amplitude > 0.0 and not trajectory.blew_up:
            try:
                window = (0.25 * float(times[-1]), float(times[-1]))
                rate = fit_decay(times, trajectory.nonzero_norms(), window)["rate"]
            except ConfigurationError:
                rate = 0.0
        if verdict == "inconclusive":
            self._log.warning(
                "inconclusive run B=%g amplitude=%g: final ratio %.3g", B, amplitude, final_ratio
            )
        return SweepRow(
            B=float(B),
            amplitude=float(amplitude),
            verdict=verdict,
            rate=float(rate),
            final_ratio=final_ratio,
            tau_reached=float(times[-1]),
        )

    def run(self) -> SweepTable:
        config = self.config
        cells = [(B, a) for B in config.B_values for a in config.amplitudes]
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                rows = list(pool.map(lambda cell: self.run_cell(*cell), cells))
        else:
            rows = [self.run_cell(B, a) for B, a in cells]

        thresholds: dict[str, float] = {}
        for B in config.B_values:
            decaying = [
                row["amplitude"]
                for row in rows
                if row["B"] == float(B) and row["verdict"] == "decaying"
            ]
            thresholds[f"{B:g}"] = float(max(decaying)) if decaying else 0.0

        flags: list[str] = []
        if any(row["verdict"] == "inconclusive" for row in rows):
            flags.append("inconclusive")
        positive = [(abs(B), thresholds[f"{B:g}"]) for B in config.B_values if thresholds[f"{B:g}"] > 0.0]
        slope = 0.0
        if len({b for b, _ in positive}) >= 2:
            slope = scaling_fit([b for b, _ in positive], [t for _, t in positive])["slope"]
        else:
            flags.append("slope-unfitted")

        self._log.info("threshold sweep: thresholds %s, slope %.4f", thresholds, slope)
        return SweepTable(rows=rows, thresholds=thresholds, slope=float(slope), flags=flags)


def threshold_sweep(grid: RadialGrid, config: SweepConfig) -> SweepTable:
    return ThresholdSweep(grid, config).run()


def global_decay_check(
    grid: RadialGrid,
    B: float,
    amplitudes,
    *,
    rate: float,
    dt: float,
    K: int = DEFAULT_K_TRUNCATION,
    decay_factor: float = DECAY_FACTOR,
    tau_rates: float = GLOBAL_DECAY_TAU_RATES,
    fraction: float = GLOBAL_DECAY_FRACTION,
    stride: int = 10,
    logger: logging.Logger | None = None,
) -> GlobalDecayReport:
    """Locate the ring threshold at one B, then rerun at `fraction` of it.

    Every run lasts tau_rates / rate, with `rate` the linear k = 1 decay rate.
    The rerun passes when it decays by `decay_factor` and its energies are
    finite and positive.
    """
    if not rate > 0.0:
        raise ConfigurationError(f"rate must be > 0, not {rate}")
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"fraction must lie in (0, 1), not {fraction}")
    log = logger or logging.getLogger(__name__)
    tau_end = tau_rates / rate
    config = SweepConfig(
        B_values=(B,),
        amplitudes=tuple(amplitudes),
        K=K,
        tau_end=tau_end,
        dt=dt,
        decay_factor=decay_factor,
        stride=stride,
    )
    table = ThresholdSweep(grid, config, logger=log).run()
    threshold = table["thresholds"][f"{B:g}"]

    amplitude = fraction * threshold
    verdict: Verdict = "inconclusive"
    final_ratio = float("inf")
    energy_total = 0.0
    if threshold > 0.0:
        init = ModeState.ring(
            grid, FlowParams.from_B(B), amplitude, modes=config.modes, K=K, r_c=config.r_c
        )
        trajectory, energy = simulate(
            init, SimulationConfig(K=K, dt=dt, tau_end=tau_end, stride=stride), logger=log
        )
        verdict, final_ratio = classify(trajectory, decay_factor)
        energy_total = float(energy["totals"]["total"])
        positive = energy["totals"]["nonzero"] > 0.0 and all(
            np.isfinite(v) and v >= 0.0
            for mode in energy["modes"].values()
            for v in mode["components"].values()
        )
    else:
        log.warning("no amplitude in %s decayed at B=%g", list(amplitudes), B)
        positive = False

    passed = verdict == "decaying" and positive and bool(np.isfinite(energy_total))
    log.info(
        "global decay B=%g K=%d: threshold %.3g, rerun at %.3g is %s (ratio %.3g)",
        B,
        K,
        threshold,
        amplitude,
        verdict,
        final_ratio,
    )
    return GlobalDecayReport(
        B=float(B),
        K=int(K),
        rate=float(rate),
        threshold=float(threshold),
        amplitude=float(amplitude),
        tau_end=float(tau_end),
        verdict=verdict,
        final_ratio=float(final_ratio),
        energy_total=energy_total,
        passed=bool(passed),
    )
