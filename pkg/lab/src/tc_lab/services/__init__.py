"""Oracles, sweeps, the audit battery and result persistence."""

from .audits import AuditBattery, run_audit_battery
from .oracles import (
    RiccatiSolution,
    crossing_radius,
    factorization_identities,
    interpolation_checks,
    manufactured_error,
    riccati_g,
    stream_oracle_error,
    weighted_estimate_g,
)
from .results import ResultWriter, config_hash, resolve_output_dir
from .sweep import SweepConfig, ThresholdSweep, classify, global_decay_check, threshold_sweep

__all__ = [
    # Oracles
    "RiccatiSolution",
    "crossing_radius",
    "factorization_identities",
    "interpolation_checks",
    "manufactured_error",
    "riccati_g",
    "stream_oracle_error",
    "weighted_estimate_g",
    # Sweeps
    "SweepConfig",
    "ThresholdSweep",
    "classify",
    "global_decay_check",
    "threshold_sweep",
    # Audits
    "AuditBattery",
    "run_audit_battery",
    # Persistence
    "ResultWriter",
    "config_hash",
    "resolve_output_dir",
]
