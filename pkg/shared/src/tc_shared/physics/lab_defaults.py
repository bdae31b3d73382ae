import math
from typing import TypedDict

# Discretization
DEFAULT_N: int = 1024
DEFAULT_R_MAX: float = 20.0
MIN_GRID_POINTS: int = 16
STRETCH_FACTOR: float = 3.0  # sinh clustering of faces toward r = 0

# Resolvent scans
SCAN_POINTS: int = 256
SCAN_LOG_FRACTION: float = 0.875  # share of positive shifts placed log-spaced
SCAN_SPAN_FACTOR: float = 4.0  # s_max = SCAN_SPAN_FACTOR * max(|beta_k|, 1)
REFINE_RTOL: float = 1e-3
REFINE_MINIMA: int = 3
DENSE_SVD_LIMIT: int = 512

# Inverse Lanczos
LANCZOS_TOL: float = 1e-8
LANCZOS_MAX_ITER: int = 300
LANCZOS_SEED: int = 20240611

# Semigroup
GP_PREFACTOR: float = math.exp(math.pi / 2.0)  # Gearhart-Pruess constant
GP_TOLERANCE: float = 0.05
DT_PER_PSI: float = 1e-3  # dt = DT_PER_PSI / Psi
RANNACHER_STEPS: int = 2  # leading steps taken as two implicit-Euler half-steps
GP_SAMPLES: int = 500  # sampled times per Gearhart-Pruess trajectory
FIT_WINDOW_PSI: tuple[float, float] = (1.0, 5.0)  # window in units of 1/Psi
MIN_TRAJECTORIES: int = 20
MONOTONE_SLACK: float = 1e-10

# Stream solver
GAUSS_LEGENDRE_ORDER: int = 5

# Nonlinear simulation
DEFAULT_K_TRUNCATION: int = 8
BLOWUP_GROWTH: float = 10.0
DECAY_FACTOR: float = 1e-3
RING_CENTER: float = 3.0
ENERGY_RATE_FRACTION: float = 0.5  # c = fraction of the fitted linear rate
SWEEP_TAU_SCALE: float = 40.0  # tau_end = SWEEP_TAU_SCALE / |B|^{1/3}
SWEEP_DT_SCALE: float = 0.05  # dt = SWEEP_DT_SCALE / |B|^{1/3}
GLOBAL_DECAY_TAU_RATES: float = 20.0  # run length in units of 1 / rate
GLOBAL_DECAY_FRACTION: float = 0.1  # checked amplitude over the located threshold

# Sharpness witness
SHARPNESS_MIN_NODES: int = 32

# Moments of the Gaussian weight used by the L1 translation
MOMENT_R3: float = 8.0  # int_0^inf r^3 e^{-r^2/4} dr
MOMENT_R1: float = 2.0  # int_0^inf r e^{-r^2/4} dr

# Output
OUTPUT_DIR_ENV: str = "TC_LAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR: str = "results"


class AuditProfile(TypedDict):
    n: int
    r_max: float
    samples: int
    trajectories: int
    interpolation_samples: int
    green_n: int
    identity_rel_tol: float  # relative residual allowed in the coercivity identity
    scan_points: int
    scaling_n: int  # grid of the Psi scaling fit


AUDIT_PROFILES: dict[str, AuditProfile] = {
    "quick": {
        "n": 256,
        "r_max": 20.0,
        "samples": 12,
        "trajectories": 20,
        "interpolation_samples": 100,
        "green_n": 1024,
        # N = 256 has 16x the h^2 error of N = 1024
        "identity_rel_tol": 5e-2,
        "scan_points": 64,
        "scaling_n": 1024,
    },
    "full": {
        "n": 1024,
        "r_max": 20.0,
        "samples": 100,
        "trajectories": 20,
        "interpolation_samples": 1000,
        "green_n": 1024,
        "identity_rel_tol": 1e-3,
        "scan_points": SCAN_POINTS,
        "scaling_n": 1024,
    },
}
