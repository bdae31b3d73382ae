"""Crank-Nicolson propagation of dw/dtau + L w = 0 and decay diagnostics."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from tc_shared.errors import ConfigurationError
from tc_shared.grid import GridFunction, NormKind, RadialGrid, bump_family, ring_profile
from tc_shared.operators import BandedComplexOperator, assemble_L0
from tc_shared.physics.lab_defaults import (
    DT_PER_PSI,
    FIT_WINDOW_PSI,
    GP_PREFACTOR,
    GP_SAMPLES,
    GP_TOLERANCE,
    LANCZOS_SEED,
    MIN_TRAJECTORIES,
    MONOTONE_SLACK,
    RANNACHER_STEPS,
    RING_CENTER,
)
from tc_shared.physics.protocol import DecayFit, GearhartPruessReport, SpacetimeReport

logger = logging.getLogger(__name__)


def step_count(tau_end: float, dt: float) -> tuple[int, float]:
    """Number of steps reaching tau_end and the step actually used."""
    if not dt > 0.0:
        raise ConfigurationError(f"dt must be > 0, not {dt}")
    if tau_end < 0.0:
        raise ConfigurationError(f"tau_end must be >= 0, not {tau_end}")
    steps = max(int(round(tau_end / dt)), 1) if tau_end > 0.0 else 0
    return steps, (tau_end / steps if steps else dt)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of the linear mode equation.

    Attributes:
        times: sample times, starting at 0
        states: (samples, N) complex node values
        dt: step used by the integrator
        stride: integrator steps between samples
        damped_steps: leading steps taken as implicit-Euler half-step pairs
    """

    grid: RadialGrid
    k: int
    B: float
    times: np.ndarray
    states: np.ndarray
    dt: float
    stride: int
    damped_steps: int = 0

    def norms(self, kind: NormKind = NormKind.L2) -> np.ndarray:
        return np.array([self.grid.norm_of(w, kind) for w in self.states])

    @property
    def initial(self) -> GridFunction:
        return GridFunction(self.grid, self.states[0])


class CrankNicolson:
    """(I + dt/2 L) w+ = (I - dt/2 L) w with the left factor computed once.

    The same factor gives implicit-Euler steps of length dt/2. `damped_step`
    takes two of them, which damps the stiff rotational components that the
    Crank-Nicolson factor maps to -1.
    """

    def __init__(self, op: BandedComplexOperator, dt: float) -> None:
        # Preconditions
        assert dt > 0.0, f"dt must be > 0, not {dt}"

        self.op = op
        self.dt = dt
        self._implicit = op.affine(1.0, 0.5 * dt)
        self._explicit = op.affine(1.0, -0.5 * dt)
        self._lu = self._implicit.lu

    def step(self, w: np.ndarray, forcing: np.ndarray | None = None) -> np.ndarray:
        rhs = self._explicit.matvec(w)
        if forcing is not None:
            rhs = rhs - self.dt * forcing
        return self._lu.solve(rhs)

    def damped_step(self, w: np.ndarray, forcing: np.ndarray | None = None) -> np.ndarray:
        half = 0.5 * self.dt
        for _ in range(2):
            w = self._lu.solve(w if forcing is None else w - half * forcing)
        return w


def propagate_linear(
    op: BandedComplexOperator,
    w0: GridFunction,
    tau_end: float,
    dt: float,
    *,
    stride: int = 1,
    damped_steps: int = RANNACHER_STEPS,
) -> Trajectory:
    """Integrate dw/dtau + L w = 0 from w0 up to tau_end.

    The first `damped_steps` steps are implicit-Euler half-step pairs, the
    rest Crank-Nicolson.
    """
    # Preconditions
    assert stride >= 1, f"stride must be >= 1, not {stride}"
    assert damped_steps >= 0, f"damped_steps must be >= 0, not {damped_steps}"
    op.grid.check_values(w0.values)

    steps, dt_used = step_count(tau_end, dt)
    scheme = CrankNicolson(op, dt_used)
    w = np.array(w0.values, dtype=complex)
    times = [0.0]
    states = [w.copy()]
    for n in range(1, steps + 1):
        w = scheme.damped_step(w) if n <= damped_steps else scheme.step(w)
        if n % stride == 0 or n == steps:
            times.append(n * dt_used)
            states.append(w.copy())

    logger.debug("propagated k=%d over %d steps of %.3g", op.k, steps, dt_used)
    return Trajectory(
        grid=op.grid,
        k=op.k,
        B=op.B,
        times=np.array(times),
        states=np.array(states),
        dt=dt_used,
        stride=stride,
        damped_steps=min(damped_steps, steps),
    )


def energy_identity_residuals(
    op: BandedComplexOperator, trajectory: Trajectory
) -> np.ndarray:
    """Per-step residual of (||w+||^2 - ||w||^2)/dt + 2 Re<L m, m>, m the midpoint.

    Each residual is relative to ||w||^2 / dt at the start of the step. The
    damped start-up steps are not Crank-Nicolson steps and are left out.
    """
    if trajectory.stride != 1:
        raise ConfigurationError("energy identity needs every step (stride 1)")
    grid = op.grid
    states = trajectory.states[trajectory.damped_steps :]
    residuals = []
    for w, w_next in zip(states[:-1], states[1:], strict=True):
        scale = grid.norm_of(w, NormKind.L2) ** 2 / trajectory.dt
        if scale == 0.0:
            residuals.append(0.0)
            continue
        mid = 0.5 * (w + w_next)
        change = (
            grid.norm_of(w_next, NormKind.L2) ** 2 - grid.norm_of(w, NormKind.L2) ** 2
        ) / trajectory.dt
        dissipation = 2.0 * float(np.real(op.quadratic_form(mid)))
        residuals.append(abs(change + dissipation) / scale)
    return np.array(residuals)


def monotonicity_defect(trajectory: Trajectory, kind: NormKind = NormKind.L2) -> float:
    """Largest sample-to-sample norm increase relative to the initial norm."""
    norms = trajectory.norms(kind)
    if norms[0] == 0.0 or len(norms) < 2:
        return 0.0
    return float(max(np.max(np.diff(norms)), 0.0) / norms[0])


def is_monotone(trajectory: Trajectory, kind: NormKind = NormKind.L2) -> bool:
    return monotonicity_defect(trajectory, kind) <= MONOTONE_SLACK


def fit_decay(
    times,
    norms,
    window: tuple[float, float],
    *,
    kind: str = "L2",
    history: dict[str, list[float]] | None = None,
) -> DecayFit:
    """Least-squares fit of log ||w|| = log C - rate tau over the window."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi) & (y > 0.0) & np.isfinite(y)
    if np.count_nonzero(mask) < 2:
        raise ConfigurationError(
            f"decay fit window [{lo:g}, {hi:g}] holds fewer than two positive samples"
        )
    slope, intercept = np.polyfit(t[mask], np.log(y[mask]), 1)
    fitted = intercept + slope * t[mask]
    residual = float(np.sqrt(np.mean((np.log(y[mask]) - fitted) ** 2)))
    return DecayFit(
        times=[float(v) for v in t],
        norms=history if history is not None else {kind: [float(v) for v in y]},
        kind=kind,
        rate=float(-slope),
        prefactor=float(np.exp(intercept)),
        window=[float(lo), float(hi)],
        residual=residual,
    )


def envelope(trajectories: list[Trajectory], kind: NormKind = NormKind.L2) -> np.ndarray:
    """Max over trajectories of ||w(tau)|| / ||w(0)|| at each sample time."""
    ratios = []
    for trajectory in trajectories:
        norms = trajectory.norms(kind)
        if norms[0] > 0.0:
            ratios.append(norms / norms[0])
    if not ratios:
        return np.zeros(len(trajectories[0].times)) if trajectories else np.zeros(0)
    return np.max(np.array(ratios), axis=0)


def gearhart_pruess_check(
    op: BandedComplexOperator,
    psi: float,
    trajectories=MIN_TRAJECTORIES,
    *,
    rng: np.random.Generator | None = None,
    tol: float = GP_TOLERANCE,
    tau_end: float | None = None,
    dt: float | None = None,
    workers: int = 1,
) -> GearhartPruessReport:
    """Sampled ||w(tau)|| / ||w0|| against e^{-tau psi + pi/2} (1 + tol).

    `trajectories` is a count of random initial states or a list of
    GridFunctions. Time runs to 5 / psi with dt = DT_PER_PSI / psi unless given;
    each trajectory is sampled at about GP_SAMPLES times.
    """
    # Preconditions
    if not psi > 0.0:
        raise ConfigurationError(f"psi must be > 0, not {psi}")

    window = (FIT_WINDOW_PSI[0] / psi, FIT_WINDOW_PSI[1] / psi)
    tau_end = window[1] if tau_end is None else tau_end
    dt = DT_PER_PSI / psi if dt is None else dt

    if isinstance(trajectories, int):
        if trajectories < MIN_TRAJECTORIES:
            logger.warning(
                "%d trajectories requested; the operator-norm estimate uses at least %d",
                trajectories,
                MIN_TRAJECTORIES,
            )
        generator = rng or np.random.default_rng(LANCZOS_SEED)
        initial = [bump_family(op.grid, generator).sample(op.grid) for _ in range(trajectories)]
    else:
        initial = list(trajectories)
    if not initial:
        raise ConfigurationError("Gearhart-Pruess check needs at least one trajectory")

    steps, _ = step_count(tau_end, dt)
    stride = max(steps // GP_SAMPLES, 1)

    def run(w0: GridFunction) -> Trajectory:
        return propagate_linear(op, w0, tau_end, dt, stride=stride)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, initial))
    else:
        runs = [run(w0) for w0 in initial]

    times = runs[0].times
    max_ratio = envelope(runs)
    bound = GP_PREFACTOR * np.exp(-times * psi)
    passed = max_ratio <= bound * (1.0 + tol)
    fit_window = (window[0], min(window[1], float(times[-1])))
    fit = fit_decay(times, max_ratio, fit_window, kind="L2-envelope")

    if not np.all(passed):
        logger.warning(
            "Gearhart-Pruess bound exceeded at %d of %d times for k=%d B=%g",
            int(np.count_nonzero(~passed)),
            len(passed),
            op.k,
            op.B,
        )
    logger.info(
        "Gearhart-Pruess k=%d B=%g psi=%.5g: fitted rate %.5g over %d trajectories",
        op.k,
        op.B,
        psi,
        fit["rate"],
        len(runs),
    )
    return GearhartPruessReport(
        k=op.k,
        B=float(op.B),
        psi=float(psi),
        trajectories=len(runs),
        times=[float(t) for t in times],
        max_ratio=[float(v) for v in max_ratio],
        bound=[float(v) for v in bound],
        passed=[bool(p) for p in passed],
        all_passed=bool(np.all(passed)),
        fit=fit,
    )


def ring_decay_fit(
    op: BandedComplexOperator,
    psi: float,
    *,
    r_c: float = RING_CENTER,
    dt: float | None = None,
) -> DecayFit:
    """Decay rate of a ring profile of mode k over the window [1/psi, 5/psi]."""
    if not psi > 0.0:
        raise ConfigurationError(f"psi must be > 0, not {psi}")
    window = (FIT_WINDOW_PSI[0] / psi, FIT_WINDOW_PSI[1] / psi)
    dt = DT_PER_PSI / psi if dt is None else dt
    steps, _ = step_count(window[1], dt)
    trajectory = propagate_linear(
        op, ring_profile(op.grid, op.k, r_c), window[1], dt, stride=max(steps // GP_SAMPLES, 1)
    )
    fit = fit_decay(trajectory.times, trajectory.norms(), window)
    logger.info("ring k=%d B=%g decays at %.5g (psi %.5g)", op.k, op.B, fit["rate"], psi)
    return fit


def _time_l2(values: np.ndarray, times: np.ndarray) -> float:
    if len(times) < 2:
        return 0.0
    return float(np.sqrt(trapezoid(values**2, times)))


def spacetime_norms(
    trajectory: Trajectory,
    c_prime: float,
    *,
    rate: float | None = None,
) -> SpacetimeReport:
    """Exponentially weighted space-time norms of a linear trajectory.

    The weight is e^{c' |kB|^{1/3} tau}. Reported norms: L-infinity-in-time L2,
    L2L2, L2X and the L2L2 norm of (|k|/r + r) w. When `rate` is given and the
    weight grows at least that fast, the result is flagged as divergent.
    """
    grid = trajectory.grid
    r = grid.nodes
    k = trajectory.k
    beta_third = abs(k * trajectory.B) ** (1.0 / 3.0)
    times = trajectory.times
    weight = np.exp(c_prime * beta_third * times)

    l2 = trajectory.norms(NormKind.L2)
    x = trajectory.norms(NormKind.X)
    kr = np.array(
        [grid.norm_of((abs(k) / r + r) * w, NormKind.L2) for w in trajectory.states]
    )
    norms = {
        "LinfL2": float(np.max(weight * l2)),
        "L2L2": _time_l2(weight * l2, times),
        "L2X": _time_l2(weight * x, times),
        "L2_kr": _time_l2(weight * kr, times),
    }
    initial = float(l2[0])
    ratios = {name: (value / initial if initial > 0.0 else 0.0) for name, value in norms.items()}

    flags: list[str] = []
    if rate is not None and c_prime * beta_third >= rate:
        flags.append("divergent-accumulation")
        logger.warning(
            "weight rate %.4g is not below the decay rate %.4g", c_prime * beta_third, rate
        )
    return SpacetimeReport(
        k=k,
        B=float(trajectory.B),
        c_prime=float(c_prime),
        initial_norm=initial,
        norms=norms,
        ratios=ratios,
        flags=flags,
    )


def ground_state_l0(grid: RadialGrid) -> np.ndarray:
    """Conserved-mass mode r^{1/2} e^{-r^2/8} of the zero-mode operator."""
    r = grid.nodes
    return np.sqrt(r) * np.exp(-(r**2) / 8.0)


def zero_mode_passivity(
    w0: GridFunction,
    tau_end: float,
    dt: float,
    *,
    project_out_ground_state: bool = False,
) -> dict[str, float]:
    """Evolve the zero mode alone and report its L2 and X behaviour.

    With `project_out_ground_state`, the component along r^{1/2} e^{-r^2/8}
    is removed first so the X norm has to decay.
    """
    grid = w0.grid
    values = np.array(w0.values)
    if project_out_ground_state:
        phi0 = ground_state_l0(grid)
        values = values - grid.inner(phi0, values) / grid.inner(phi0, phi0) * phi0
    trajectory = propagate_linear(assemble_L0(grid), GridFunction(grid, values), tau_end, dt)
    l2 = trajectory.norms(NormKind.L2)
    x = trajectory.norms(NormKind.X)
    if l2[0] == 0.0:
        return {"l2_growth": 0.0, "x_initial": 0.0, "x_final": 0.0, "x_growth_max": 0.0}
    return {
        "l2_growth": float(np.max(l2) / l2[0]),
        "x_initial": float(x[0]),
        "x_final": float(x[-1]),
        "x_growth_max": float(np.max(x) / x[0]),
    }


def fitted_rate_constant(rate: float, k: int, B: float) -> float:
    """Fitted decay rate divided by |kB|^{1/3}."""
    scale = abs(k * B) ** (1.0 / 3.0)
    return rate / scale if scale > 0.0 else 0.0
