"""Physical parameters, lab defaults and result contracts."""

from .flow_params import FlowParams
from .lab_defaults import (
    AUDIT_PROFILES,
    BLOWUP_GROWTH,
    DECAY_FACTOR,
    DEFAULT_K_TRUNCATION,
    DEFAULT_N,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_R_MAX,
    GP_PREFACTOR,
    MIN_GRID_POINTS,
    OUTPUT_DIR_ENV,
    AuditProfile,
)
from .protocol import (
    AuditOutcome,
    DecayFit,
    EnergyReport,
    GlobalDecayReport,
    GridSpec,
    NormPairName,
    ScanResult,
    SweepRow,
    SweepTable,
    Verdict,
)

__all__ = [
    # Parameters
    "FlowParams",
    # Defaults
    "AUDIT_PROFILES",
    "BLOWUP_GROWTH",
    "DECAY_FACTOR",
    "DEFAULT_K_TRUNCATION",
    "DEFAULT_N",
    "DEFAULT_OUTPUT_DIR",
    "DEFAULT_R_MAX",
    "GP_PREFACTOR",
    "MIN_GRID_POINTS",
    "OUTPUT_DIR_ENV",
    "AuditProfile",
    # Result contracts
    "AuditOutcome",
    "DecayFit",
    "EnergyReport",
    "GlobalDecayReport",
    "GridSpec",
    "NormPairName",
    "ScanResult",
    "SweepRow",
    "SweepTable",
    "Verdict",
]
