"""Numerical engines: resolvent scans, semigroup propagation, stream solves, nonlinear runs."""

from .coercivity import coercivity_audit, identity_sides
from .energy import (
    energy_Ek,
    fitted_weight_constant,
    initial_size,
    interaction_inequality_audit,
    physical_energy,
    translate_physical,
)
from .nonlinear import (
    IMEXStepper,
    ModeState,
    NonlinearTrajectory,
    SimulationConfig,
    assemble_f1_f2,
    integrate,
    interaction_pairing,
    simulate,
    step,
)
from .resolvent import (
    ScanConfig,
    bisect_c2,
    pseudospectral_bound,
    psi_scaling,
    resolvent_norm_at,
    scaling_fit,
    sharpness_witness,
    shifted_resolvent_audit,
)
from .semigroup import (
    CrankNicolson,
    Trajectory,
    envelope,
    fit_decay,
    gearhart_pruess_check,
    propagate_linear,
    ring_decay_fit,
    spacetime_norms,
    zero_mode_passivity,
)
from .singular import NormPair, SigmaEstimate, sigma_min
from .stream import (
    StreamPair,
    StreamSolver,
    coercivity_check,
    elliptic_estimate_audit,
    green_oracle,
    solve_stream,
    stream_residual,
    zero_mode_velocity,
)

__all__ = [
    # Resolvent
    "NormPair",
    "ScanConfig",
    "SigmaEstimate",
    "bisect_c2",
    "pseudospectral_bound",
    "psi_scaling",
    "resolvent_norm_at",
    "scaling_fit",
    "sharpness_witness",
    "shifted_resolvent_audit",
    "sigma_min",
    "coercivity_audit",
    "identity_sides",
    # Semigroup
    "CrankNicolson",
    "Trajectory",
    "envelope",
    "fit_decay",
    "gearhart_pruess_check",
    "propagate_linear",
    "ring_decay_fit",
    "spacetime_norms",
    "zero_mode_passivity",
    # Stream function
    "StreamPair",
    "StreamSolver",
    "coercivity_check",
    "elliptic_estimate_audit",
    "green_oracle",
    "solve_stream",
    "stream_residual",
    "zero_mode_velocity",
    # Nonlinear runs
    "IMEXStepper",
    "ModeState",
    "NonlinearTrajectory",
    "SimulationConfig",
    "assemble_f1_f2",
    "integrate",
    "interaction_pairing",
    "simulate",
    "step",
    "energy_Ek",
    "fitted_weight_constant",
    "initial_size",
    "interaction_inequality_audit",
    "physical_energy",
    "translate_physical",
]
