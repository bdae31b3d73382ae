"""Energy functionals of nonlinear runs and their translation to physical variables.

For k != 0, with e(tau) = e^{c |kB|^{1/3} tau},

    E_k = ||e w_k||_{LinfL2}
        + |kB|^{1/6} ( ||e w_k||_{L2L2} + ||e w_k / r||_{LinfL2}
                       + |k| ||e w_k / r^2||_{L2L2} + |k|^{1/2} ||e w_k / r^{3/2}||_{L2Linf} )
        + |kB|^{1/3} ||e w_k / r||_{L2L2}

    E_0 = |B|^{1/6} ( ||w_0/r||_{LinfL2} + ||w_0/r^{3/2}||_{L2Linf}
                      + ||w_0/r^2||_{L2L2} + ||w_0||_{L2L2} )

Time integrals use the trapezoidal rule over the stored samples, time suprema
the largest sample.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import quad, trapezoid

from tc_shared.errors import ConfigurationError
from tc_shared.grid import NormKind, RadialGrid, ring_profile
from tc_shared.operators import assemble_Lk
from tc_shared.physics import FlowParams
from tc_shared.physics.lab_defaults import (
    ENERGY_RATE_FRACTION,
    MOMENT_R1,
    MOMENT_R3,
)
from tc_shared.physics.protocol import DecayFit, EnergyReport, ModeEnergy, PhysicalReport

from .semigroup import fit_decay, fitted_rate_constant, propagate_linear

if TYPE_CHECKING:
    from .nonlinear import ModeState, NonlinearTrajectory

logger = logging.getLogger(__name__)


def _time_l2(values: np.ndarray, times: np.ndarray) -> float:
    if len(times) < 2:
        return 0.0
    return float(np.sqrt(trapezoid(values**2, times)))


def _spatial_profiles(grid: RadialGrid, states: np.ndarray) -> dict[str, np.ndarray]:
    """Per-sample spatial norms of one mode, states shaped (samples, N)."""
    r = grid.nodes
    return {
        "L2": np.array([grid.norm_of(w, NormKind.L2) for w in states]),
        "X": np.array([grid.norm_of(w, NormKind.X) for w in states]),
        "r2": np.array([grid.norm_of(w / r, NormKind.X) for w in states]),
        "sup_r32": np.max(np.abs(states) / r**1.5, axis=1)
        if len(states)
        else np.zeros(0),
    }


def mode_energy(
    grid: RadialGrid, times: np.ndarray, states: np.ndarray, k: int, B: float, c: float
) -> ModeEnergy:
    """E_k of one nonzero mode from its samples."""
    beta = abs(k * B)
    weight = np.exp(c * beta ** (1.0 / 3.0) * times)
    norms = _spatial_profiles(grid, states)
    sixth = beta ** (1.0 / 6.0)
    components = {
        "LinfL2": float(np.max(weight * norms["L2"])),
        "L2L2": sixth * _time_l2(weight * norms["L2"], times),
        "LinfX": sixth * float(np.max(weight * norms["X"])),
        "L2_r2": sixth * abs(k) * _time_l2(weight * norms["r2"], times),
        "L2Linf_r32": sixth * np.sqrt(abs(k)) * _time_l2(weight * norms["sup_r32"], times),
        "L2X": beta ** (1.0 / 3.0) * _time_l2(weight * norms["X"], times),
    }
    return ModeEnergy(k=int(k), components=components, total=float(sum(components.values())))


def zero_mode_energy(grid: RadialGrid, times: np.ndarray, states: np.ndarray, B: float) -> ModeEnergy:
    norms = _spatial_profiles(grid, states)
    sixth = abs(B) ** (1.0 / 6.0)
    components = {
        "LinfX": sixth * float(np.max(norms["X"])),
        "L2Linf_r32": sixth * _time_l2(norms["sup_r32"], times),
        "L2_r2": sixth * _time_l2(norms["r2"], times),
        "L2L2": sixth * _time_l2(norms["L2"], times),
    }
    return ModeEnergy(k=0, components=components, total=float(sum(components.values())))


def fit_mode_decays(
    trajectory: NonlinearTrajectory, window: tuple[float, float] | None = None
) -> dict[str, DecayFit]:
    """L2 decay fit of every nonzero mode that stays positive over the window.

    The default window is the last three quarters of the run.
    """
    times = trajectory.times
    if window is None:
        window = (0.25 * float(times[-1]), float(times[-1]))
    norms = trajectory.mode_norms(NormKind.L2)
    fits: dict[str, DecayFit] = {}
    for k in range(1, trajectory.K + 1):
        if norms[0, k] == 0.0:
            continue
        try:
            fits[str(k)] = fit_decay(times, norms[:, k], window)
        except ConfigurationError:
            logger.debug("no decay fit for mode %d on window %s", k, window)
    return fits


def energy_Ek(trajectory: NonlinearTrajectory, c: float) -> EnergyReport:
    """E_k for k = 1..K and E_0 of a sampled run.

    E_{-k} equals E_k, so totals["nonzero"] counts every positive mode twice.
    """
    # Preconditions
    assert c >= 0.0, f"weight constant must be >= 0, not {c}"

    grid = trajectory.grid
    B = float(trajectory.params.B)
    times = trajectory.times
    modes = {
        str(k): mode_energy(grid, times, trajectory.states[:, k], k, B, c)
        for k in range(1, trajectory.K + 1)
    }
    zero = zero_mode_energy(grid, times, trajectory.states[:, 0], B)
    nonzero = 2.0 * sum(m["total"] for m in modes.values())
    report = EnergyReport(
        B=B,
        c=float(c),
        modes=modes,
        zero_mode=zero,
        totals={"nonzero": nonzero, "zero": zero["total"], "total": nonzero + zero["total"]},
        decay_fits=fit_mode_decays(trajectory) if len(times) > 2 else {},
        flags=list(trajectory.flags),
    )

    # Postconditions
    assert all(
        v >= 0.0 for m in modes.values() for v in m["components"].values()
    ), "energy components must be nonnegative"
    return report


def fitted_weight_constant(
    grid: RadialGrid,
    params: FlowParams,
    tau_end: float,
    dt: float,
    *,
    fraction: float = ENERGY_RATE_FRACTION,
) -> tuple[float, DecayFit]:
    """c = fraction * (linear k = 1 decay rate) / |B|^{1/3}.

    The rate is fitted on a linear k = 1 ring trajectory over the last three
    quarters of [0, tau_end].
    """
    if tau_end <= 0.0:
        raise ConfigurationError(f"tau_end must be > 0 to fit a rate, not {tau_end}")
    trajectory = propagate_linear(assemble_Lk(grid, 1, params), ring_profile(grid, 1), tau_end, dt)
    fit = fit_decay(trajectory.times, trajectory.norms(), (0.25 * tau_end, tau_end))
    c = fraction * max(fitted_rate_constant(fit["rate"], 1, params.B), 0.0)
    logger.info("energy weight c=%.4g from k=1 rate %.4g (B=%g)", c, fit["rate"], params.B)
    return c, fit


def gaussian_moments() -> dict[str, float]:
    """int_0^inf r^3 e^{-r^2/4} dr and int_0^inf r e^{-r^2/4} dr by adaptive quadrature."""
    r3 = quad(lambda r: r**3 * np.exp(-(r**2) / 4.0), 0.0, np.inf, epsabs=1e-13)[0]
    r1 = quad(lambda r: r * np.exp(-(r**2) / 4.0), 0.0, np.inf, epsabs=1e-13)[0]
    return {
        "r3": float(r3),
        "r1": float(r1),
        "r3_error": abs(r3 - MOMENT_R3),
        "r1_error": abs(r1 - MOMENT_R1),
    }


def physical_vorticity(state: ModeState, angles: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Perturbation vorticity sum_k f w_k e^{ik theta} on an (r, theta) tensor grid.

    Returns (theta, values) with values shaped (N, angles) in the scaled frame.
    """
    count = angles or max(64, 8 * state.K)
    theta = 2.0 * np.pi * np.arange(count) / count
    omega = state.grid.fweight * state.values
    phases = np.exp(1j * np.outer(np.arange(1, state.K + 1), theta))
    values = omega[0].real[:, None] + 2.0 * np.real(omega[1:].T @ phases)
    return theta, values


def translate_physical(state: ModeState, params: FlowParams | None = None) -> PhysicalReport:
    """M-norms of the physical perturbation and the L1 bound they control.

    ||omega_k||_M and ||omega_k / r||_M are evaluated directly from
    omega_k = f w_k, so their agreement with ||w_k||_L2 and ||w_k||_X checks
    that the weights cancel.
    """
    params = params or state.params
    grid = state.grid
    r = grid.nodes
    omega = grid.fweight * state.values
    m_norms = {str(k): grid.norm_of(omega[k], NormKind.M) for k in range(state.K + 1)}
    m_over_r = {str(k): grid.norm_of(omega[k] / r, NormKind.M) for k in range(state.K + 1)}

    B = abs(params.B)
    script_e = B ** (1.0 / 6.0) * m_over_r["0"] + 2.0 * sum(
        m_norms[str(k)] + (k * B) ** (1.0 / 6.0) * m_over_r[str(k)]
        for k in range(1, state.K + 1)
    )
    nonzero_m = 2.0 * sum(m_norms[str(k)] for k in range(1, state.K + 1))
    l1_bound = (
        2.0 * np.pi * params.nu
        * (np.sqrt(MOMENT_R3) * m_over_r["0"] + np.sqrt(MOMENT_R1) * nonzero_m)
    )
    theta, values = physical_vorticity(state)
    l1_direct = params.nu * float(
        np.sum(grid.weights * r * np.mean(np.abs(values), axis=1)) * 2.0 * np.pi
    )
    return PhysicalReport(
        tau=float(state.tau),
        m_norms=m_norms,
        m_norms_over_r=m_over_r,
        script_e=float(script_e),
        l1_bound=float(l1_bound),
        l1_direct=l1_direct,
        moments=gaussian_moments(),
    )


def physical_energy(state: ModeState) -> float:
    """|B|^{1/6} ||omega_0/r||_M + sum_{k != 0} (||omega_k||_M + |kB|^{1/6} ||omega_k/r||_M)."""
    return translate_physical(state)["script_e"]


def initial_size(state: ModeState) -> dict[str, float]:
    """Smallness measure of the data entering global decay and its ratio to |B|^{1/3}.

        sum_{k != 0} ||w_k|| + sum_{k != 0} |kB|^{1/6} ||w_k||_X + |B|^{1/6} ||w_0||_X
    """
    B = abs(state.params.B)
    l2 = state.norms(NormKind.L2)
    x = state.norms(NormKind.X)
    k = np.arange(1, state.K + 1)
    size = 2.0 * float(np.sum(l2[1:])) + 2.0 * float(np.sum((k * B) ** (1.0 / 6.0) * x[1:]))
    size += B ** (1.0 / 6.0) * float(x[0])
    return {"size": size, "ratio": size / B ** (1.0 / 3.0) if B > 0.0 else np.inf}


def interaction_inequality_audit(K: int, B: float = 1.0) -> dict[str, float | int]:
    """Check |kB|^{1/3} <= |lB|^{1/3} + |(k - l)B|^{1/3} over every truncated pair."""
    if K < 1:
        raise ConfigurationError(f"K must be >= 1, not {K}")
    pairs = 0
    violations = 0
    slack = np.inf
    for k in range(-K, K + 1):
        for l in range(-K, K + 1):  # noqa: E741
            if abs(k - l) > K:
                continue
            pairs += 1
            left = abs(k * B) ** (1.0 / 3.0)
            right = abs(l * B) ** (1.0 / 3.0) + abs((k - l) * B) ** (1.0 / 3.0)
            if left > right:
                violations += 1
            slack = min(slack, right - left)
    return {"pairs": pairs, "violations": violations, "min_slack": float(slack)}
