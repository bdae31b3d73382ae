"""Mode-coupled nonlinear evolution dw_k/dtau + L_k w_k + f1 - d/dr f2 = 0.

Only modes k = 0..K are stored; w_{-k} is conj(w_k), so the physical
vorticity stays real by construction. The zero mode is real and evolves with
L_0. The linear part is advanced by Crank-Nicolson and the quadratic
interaction by second-order Adams-Bashforth (forward Euler on the first step).
The first steps of a run are implicit-Euler half-step pairs, as in
propagate_linear.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from tc_shared.errors import ConfigurationError, OperatorError
from tc_shared.grid import GridFunction, NormKind, RadialGrid, ring_profile
from tc_shared.operators import BandedComplexOperator, assemble_L0, assemble_Lk
from tc_shared.physics import FlowParams
from tc_shared.physics.lab_defaults import (
    BLOWUP_GROWTH,
    DEFAULT_K_TRUNCATION,
    ENERGY_RATE_FRACTION,
    RANNACHER_STEPS,
    RING_CENTER,
)
from tc_shared.physics.protocol import EnergyReport

from .energy import energy_Ek, fitted_weight_constant
from .semigroup import CrankNicolson, Trajectory, step_count
from .stream import StreamSolver, zero_mode_velocity

logger = logging.getLogger(__name__)

CFL_LIMIT: float = 0.5


@dataclass(frozen=True, eq=False)
class ModeState:
    """Fourier modes w_0..w_K of the perturbation at time tau.

    Attributes:
        values: (K + 1, N) complex array, row k holding w_k
        tau: current time
        params: base-flow parameters
    """

    grid: RadialGrid
    values: np.ndarray
    params: FlowParams
    tau: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] != self.grid.n:
            raise OperatorError(
                f"mode array has shape {values.shape}, expected (K + 1, {self.grid.n})"
            )
        # The zero mode of a real vorticity is real
        values[0] = values[0].real
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: RadialGrid, params: FlowParams, K: int = DEFAULT_K_TRUNCATION) -> ModeState:
        if K < 1:
            raise ConfigurationError(f"truncation K must be >= 1, not {K}")
        return cls(grid, np.zeros((K + 1, grid.n), dtype=complex), params)

    @classmethod
    def from_profiles(
        cls,
        grid: RadialGrid,
        params: FlowParams,
        profiles: dict[int, GridFunction | np.ndarray],
        K: int = DEFAULT_K_TRUNCATION,
    ) -> ModeState:
        """Build a state from per-mode profiles; a profile for -k sets w_k = conj of it."""
        values = np.zeros((K + 1, grid.n), dtype=complex)
        for k, profile in profiles.items():
            if abs(k) > K:
                raise ConfigurationError(f"mode {k} lies outside the truncation K={K}")
            data = np.asarray(getattr(profile, "values", profile), dtype=complex)
            grid.check_values(data)
            if k < 0 and -k in profiles:
                continue
            values[abs(k)] = np.conj(data) if k < 0 else data
        return cls(grid, values, params)

    @classmethod
    def ring(
        cls,
        grid: RadialGrid,
        params: FlowParams,
        amplitude: float,
        *,
        modes: tuple[int, ...] = (1,),
        K: int = DEFAULT_K_TRUNCATION,
        r_c: float = RING_CENTER,
    ) -> ModeState:
        """Ring profiles r^{|k|} e^{-(r - r_c)^2} with L2 norm `amplitude` in each listed mode."""
        profiles = {k: ring_profile(grid, k, r_c, amplitude) for k in modes}
        return cls.from_profiles(grid, params, profiles, K)

    @property
    def K(self) -> int:
        return self.values.shape[0] - 1

    def mode(self, k: int) -> GridFunction:
        if abs(k) > self.K:
            raise OperatorError(f"mode {k} lies outside the truncation K={self.K}")
        data = self.values[abs(k)]
        return GridFunction(self.grid, np.conj(data) if k < 0 else data)

    @property
    def modes(self) -> dict[int, GridFunction]:
        return {k: self.mode(k) for k in range(-self.K, self.K + 1)}

    def norms(self, kind: NormKind = NormKind.L2) -> np.ndarray:
        return np.array([self.grid.norm_of(w, kind) for w in self.values])

    def nonzero_norm(self, kind: NormKind = NormKind.L2) -> float:
        """Sum of ||w_k|| over k = 1..K."""
        return float(np.sum(self.norms(kind)[1:]))

    def advance(self, values: np.ndarray, tau: float) -> ModeState:
        return ModeState(self.grid, values, self.params, tau)


def _full_modes(values: np.ndarray) -> np.ndarray:
    """Rows for k = -K..K; row index k + K."""
    return np.concatenate([np.conj(values[:0:-1]), values], axis=0)


def stream_fields(
    values: np.ndarray, grid: RadialGrid, solver: StreamSolver
) -> tuple[np.ndarray, np.ndarray]:
    """phi_breve_k and d/dr phi_breve_k for k = 0..K.

    phi_breve_0 itself never enters the interaction (its factor k - l is 0),
    so only its derivative is filled in.
    """
    r = grid.nodes
    breve = np.zeros_like(values)
    dbreve = np.zeros_like(values)
    dbreve[0] = zero_mode_velocity(values[0], grid)
    for k in range(1, values.shape[0]):
        if not np.any(values[k]):
            continue
        pair = solver.solve(values[k], k)
        breve[k] = pair.phi_breve.values
        dbreve[k] = np.gradient(breve[k], r, edge_order=2)
    return breve, dbreve


def assemble_f1_f2(
    state: ModeState, k: int, *, solver: StreamSolver | None = None
) -> tuple[GridFunction, GridFunction]:
    """f1 and f2 of mode k from the truncated convolution over |l|, |k - l| <= K."""
    if abs(k) > state.K:
        raise OperatorError(f"mode {k} lies outside the truncation K={state.K}")
    solver = solver or StreamSolver(state.grid)
    breve, dbreve = stream_fields(state.values, state.grid, solver)
    f1, f2 = _interaction(state.values, breve, dbreve, state.grid.nodes, abs(k))
    if k < 0:
        f1, f2 = np.conj(f1), np.conj(f2)
    return GridFunction(state.grid, f1), GridFunction(state.grid, f2)


def _interaction(values, breve, dbreve, r, k: int) -> tuple[np.ndarray, np.ndarray]:
    K = values.shape[0] - 1
    w_all = _full_modes(values)
    p_all = _full_modes(breve)
    dp_all = _full_modes(dbreve)
    f1 = np.zeros(len(r), dtype=complex)
    f2 = np.zeros(len(r), dtype=complex)
    for l in range(max(-K, k - K), min(K, k + K) + 1):  # noqa: E741
        m = k - l
        w_l = w_all[l + K]
        f1 += 1j * k * w_l * dp_all[m + K] / r
        if m != 0:
            product = 1j * m * w_l * p_all[m + K]
            f1 += (0.25 - 0.5 / r**2) * product
            f2 += product / r
    return f1, f2


def nonlinear_term(values: np.ndarray, grid: RadialGrid, solver: StreamSolver) -> np.ndarray:
    """f1 - d/dr f2 for k = 0..K, with the skew first derivative."""
    breve, dbreve = stream_fields(values, grid, solver)
    out = np.zeros_like(values)
    for k in range(values.shape[0]):
        f1, f2 = _interaction(values, breve, dbreve, grid.nodes, k)
        out[k] = f1 - grid.d1 @ f2
    return out


def interaction_pairing(state: ModeState, *, solver: StreamSolver | None = None) -> dict[str, float]:
    """sum_k Re<f1 - d/dr f2, w_k> over k = -K..K, evaluated two ways.

    "direct" applies the derivative to f2; "by_parts" moves it onto w_k. The
    two agree to round-off because W D1 is skew.
    """
    grid = state.grid
    solver = solver or StreamSolver(grid)
    values = state.values
    breve, dbreve = stream_fields(values, grid, solver)
    direct = 0.0
    by_parts = 0.0
    for k in range(values.shape[0]):
        f1, f2 = _interaction(values, breve, dbreve, grid.nodes, k)
        w = values[k]
        # Modes -k contribute the complex conjugate of mode k
        factor = 1.0 if k == 0 else 2.0
        direct += factor * float(np.real(grid.inner(w, f1 - grid.d1 @ f2)))
        by_parts += factor * float(np.real(grid.inner(w, f1) + grid.inner(grid.d1 @ w, f2)))
    return {"direct": direct, "by_parts": by_parts, "difference": abs(direct - by_parts)}


def courant_number(state: ModeState, dt: float, *, solver: StreamSolver | None = None) -> float:
    """dt times the largest advective speed of the scaled flow over the smallest cell."""
    grid = state.grid
    r = grid.nodes
    breve, dbreve = stream_fields(state.values, grid, solver or StreamSolver(grid))
    k = np.arange(state.K + 1)[:, None]
    radial = np.sum(np.abs(k * breve) / r, axis=0)
    angular = np.sum(np.abs(dbreve), axis=0)
    h_min = float(np.min(grid.weights))
    return float(dt * np.max(radial + angular) / h_min)


def mode_operators(grid: RadialGrid, params: FlowParams, K: int) -> list[BandedComplexOperator]:
    return [assemble_L0(grid)] + [assemble_Lk(grid, k, params) for k in range(1, K + 1)]


class IMEXStepper:
    """Crank-Nicolson for L_k, Adams-Bashforth 2 for the interaction.

    The Crank-Nicolson factorizations are built once per mode and also serve
    the `damped_steps` implicit-Euler start-up steps. With
    `workers` > 1 the per-mode solves run on a thread pool and are joined
    before the next interaction is formed.
    """

    def __init__(
        self,
        grid: RadialGrid,
        params: FlowParams,
        K: int,
        dt: float,
        *,
        workers: int = 1,
        damped_steps: int = RANNACHER_STEPS,
        solver: StreamSolver | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        # Preconditions
        assert K >= 1, f"K must be >= 1, not {K}"
        assert dt > 0.0, f"dt must be > 0, not {dt}"
        assert damped_steps >= 0, f"damped_steps must be >= 0, not {damped_steps}"

        self.grid = grid
        self.params = params
        self.K = K
        self.dt = dt
        self.damped_steps = damped_steps
        self._taken = 0
        self._log = logger or logging.getLogger(__name__)
        self._schemes = [CrankNicolson(op, dt) for op in mode_operators(grid, params, K)]
        self._solver = solver or StreamSolver(grid)
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        self._previous: np.ndarray | None = None
        self.reality_defect = 0.0

    def reset(self) -> None:
        self._previous = None
        self._taken = 0

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self) -> IMEXStepper:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def step(self, state: ModeState) -> ModeState:
        if state.K != self.K:
            raise OperatorError(f"state has K={state.K}, stepper was built for K={self.K}")
        current = nonlinear_term(state.values, self.grid, self._solver)
        if self._previous is None:
            forcing = current
        else:
            forcing = 1.5 * current - 0.5 * self._previous
        self._previous = current
        damped = self._taken < self.damped_steps
        self._taken += 1

        def advance(k: int) -> np.ndarray:
            scheme = self._schemes[k]
            if damped:
                return scheme.damped_step(state.values[k], forcing[k])
            return scheme.step(state.values[k], forcing[k])

        modes = range(self.K + 1)
        if self._pool is not None:
            rows = list(self._pool.map(advance, modes))
        else:
            rows = [advance(k) for k in modes]
        values = np.array(rows)

        scale = max(float(np.max(np.abs(values[0]))), np.finfo(float).tiny)
        self.reality_defect = max(
            self.reality_defect, float(np.max(np.abs(values[0].imag))) / scale
        )
        return state.advance(values, state.tau + self.dt)


def step(state: ModeState, dt: float) -> ModeState:
    """One step from a cold start: forward-Euler interaction, damped linear part."""
    return IMEXStepper(state.grid, state.params, state.K, dt).step(state)


@dataclass(frozen=True)
class SimulationConfig:
    """Knobs of one nonlinear run.

    Attributes:
        K: mode truncation
        dt: time step
        tau_end: final time
        stride: steps between stored samples
        workers: threads for the per-mode solves
        blowup_growth: stop once the total mode norm grows by this factor
        rate_fraction: c of the energy weights as a fraction of the fitted
            linear k = 1 rate (over |B|^{1/3})
        c: explicit weight constant, overriding the fitted one
    """

    K: int = DEFAULT_K_TRUNCATION
    dt: float = 1e-3
    tau_end: float = 1.0
    stride: int = 1
    workers: int = 1
    blowup_growth: float = BLOWUP_GROWTH
    rate_fraction: float = ENERGY_RATE_FRACTION
    c: float | None = None

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ConfigurationError(f"K must be >= 1, not {self.K}")
        if not self.dt > 0.0:
            raise ConfigurationError(f"dt must be > 0, not {self.dt}")
        if not self.tau_end >= 0.0:
            raise ConfigurationError(f"tau_end must be >= 0, not {self.tau_end}")
        if self.stride < 1:
            raise ConfigurationError(f"stride must be >= 1, not {self.stride}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, not {self.workers}")
        if not self.blowup_growth > 1.0:
            raise ConfigurationError(f"blowup_growth must be > 1, not {self.blowup_growth}")


@dataclass(frozen=True, eq=False)
class NonlinearTrajectory:
    """Sampled mode states of one nonlinear run.

    Attributes:
        states: (samples, K + 1, N) complex mode values
        flags: "blow-up", "cfl-exceeded"
        reality_defect: largest imaginary part produced in the zero mode,
            relative to its size, before it was dropped
    """

    grid: RadialGrid
    params: FlowParams
    times: np.ndarray
    states: np.ndarray
    dt: float
    stride: int
    flags: list[str] = field(default_factory=list)
    reality_defect: float = 0.0

    @property
    def K(self) -> int:
        return self.states.shape[1] - 1

    @property
    def blew_up(self) -> bool:
        return "blow-up" in self.flags

    def mode_norms(self, kind: NormKind = NormKind.L2) -> np.ndarray:
        """(samples, K + 1) norms of w_k."""
        return np.array(
            [[self.grid.norm_of(w, kind) for w in sample] for sample in self.states]
        )

    def nonzero_norms(self, kind: NormKind = NormKind.L2) -> np.ndarray:
        return self.mode_norms(kind)[:, 1:].sum(axis=1)

    def mode_trajectory(self, k: int) -> Trajectory:
        """Samples of w_k as a single-mode Trajectory (k = 0 carries B = 0)."""
        data = self.states[:, abs(k)]
        return Trajectory(
            grid=self.grid,
            k=int(k),
            B=float(self.params.B) if k != 0 else 0.0,
            times=self.times,
            states=np.conj(data) if k < 0 else data,
            dt=self.dt,
            stride=self.stride,
        )

    def state_at(self, index: int) -> ModeState:
        return ModeState(self.grid, self.states[index], self.params, float(self.times[index]))

    @property
    def final(self) -> ModeState:
        return self.state_at(-1)


def integrate(
    init: ModeState, config: SimulationConfig, *, logger: logging.Logger | None = None
) -> NonlinearTrajectory:
    """Run the IMEX scheme from `init` until tau_end or blow-up.

    Blow-up is a non-finite state or growth of sum_k ||w_k|| (k = 0..K) by
    `blowup_growth` over its initial value; the last valid state is kept.
    """
    log = logger or logging.getLogger(__name__)
    if config.K != init.K:
        raise ConfigurationError(f"config K={config.K} does not match the state's K={init.K}")

    steps, dt = step_count(config.tau_end, config.dt)
    solver = StreamSolver(init.grid)
    flags: list[str] = []
    courant = courant_number(init, dt, solver=solver)
    if courant > CFL_LIMIT:
        flags.append("cfl-exceeded")
        log.warning("initial Courant number %.3g exceeds %.2g", courant, CFL_LIMIT)

    initial_size = float(np.sum(init.norms()))
    state = init
    times = [init.tau]
    samples = [np.array(init.values)]
    with IMEXStepper(
        init.grid, init.params, init.K, dt, workers=config.workers, solver=solver, logger=log
    ) as stepper:
        for n in range(1, steps + 1):
            candidate = stepper.step(state)
            finite = bool(np.all(np.isfinite(candidate.values)))
            size = float(np.sum(candidate.norms())) if finite else np.inf
            if not finite or (initial_size > 0.0 and size > config.blowup_growth * initial_size):
                flags.append("blow-up")
                log.warning(
                    "blow-up at tau=%.4g (B=%g): mode norms grew to %.3g from %.3g",
                    candidate.tau,
                    init.params.B,
                    size,
                    initial_size,
                )
                if times[-1] != state.tau:
                    times.append(state.tau)
                    samples.append(np.array(state.values))
                break
            state = candidate
            if n % config.stride == 0 or n == steps:
                times.append(state.tau)
                samples.append(np.array(state.values))
        defect = stepper.reality_defect

    log.info(
        "nonlinear run B=%g K=%d reached tau=%.4g in %d samples%s",
        init.params.B,
        init.K,
        times[-1],
        len(times),
        " (blow-up)" if "blow-up" in flags else "",
    )
    return NonlinearTrajectory(
        grid=init.grid,
        params=init.params,
        times=np.array(times),
        states=np.array(samples),
        dt=dt,
        stride=config.stride,
        flags=flags,
        reality_defect=defect,
    )


def simulate(
    init: ModeState, config: SimulationConfig, *, logger: logging.Logger | None = None
) -> tuple[NonlinearTrajectory, EnergyReport]:
    """Nonlinear run with its energy report.

    The weight constant c is `config.c` when given, otherwise
    `config.rate_fraction` times the fitted linear k = 1 rate over |B|^{1/3}.
    A blown-up run still returns the energies of its valid part.
    """
    init.params.require_rotating_regime()
    trajectory = integrate(init, config, logger=logger)
    if config.c is not None:
        c = config.c
    elif config.tau_end > 0.0:
        c, _ = fitted_weight_constant(
            init.grid, init.params, config.tau_end, config.dt, fraction=config.rate_fraction
        )
    else:
        c = 0.0
    return trajectory, energy_Ek(trajectory, c)
