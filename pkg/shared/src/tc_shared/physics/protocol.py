"""Result contracts shared by the engines, the persistence layer and the CLI.

Every structure here is a plain TypedDict of JSON-ready values (floats, ints,
strings, lists, nested dicts) so results can be written without conversion
and compared byte-for-byte between runs.
"""

from typing import Literal, TypedDict

NormPairName = Literal["L2", "X", "Hm1-shifted", "X-Hm1-shifted"]
Verdict = Literal["decaying", "blow-up", "inconclusive"]


class GridSpec(TypedDict):
    """Description of a radial grid.

    Attributes:
        n: number of nodes
        r_max: outer face of the truncated domain
        scheme: "uniform" or "stretched"
        h_min: smallest cell width
        h_max: largest cell width
    """

    n: int
    r_max: float
    scheme: str
    h_min: float
    h_max: float


class ScanResult(TypedDict):
    """Resolvent scan along the imaginary axis for one mode.

    Attributes:
        k: azimuthal mode
        B: rotation ratio A2/nu
        norm_pair: norms measuring (L_k - is) w and w
        shifts: scanned shifts s, sorted ascending (coarse and refined)
        sigma_min: smallest singular value of L_k - is at each shift
            (the inverse resolvent norm)
        psi: minimum of sigma_min, the pseudospectral bound estimate
        psi_shift: shift at which psi was attained
        refinement_depth: number of local minima refined
        flags: e.g. "unresolved-minimum", "lanczos-unconverged"
        grid: grid description
    """

    k: int
    B: float
    norm_pair: NormPairName
    shifts: list[float]
    sigma_min: list[float]
    psi: float
    psi_shift: float
    refinement_depth: int
    flags: list[str]
    grid: GridSpec


class ScalingFit(TypedDict):
    """Least-squares fit log y = log C + slope * log x."""

    slope: float
    prefactor: float
    residual: float
    x: list[float]
    y: list[float]


class DecayFit(TypedDict):
    """Exponential fit of a norm history over a time window.

    Attributes:
        times: sample times tau
        norms: norm history per norm kind ("L2", "X", ...)
        kind: norm kind the fit was made on
        rate: fitted decay rate (positive means decay)
        prefactor: fitted C in C e^{-rate tau}
        window: (tau_lo, tau_hi) used by the fit
        residual: root-mean-square residual of the log fit
    """

    times: list[float]
    norms: dict[str, list[float]]
    kind: str
    rate: float
    prefactor: float
    window: list[float]
    residual: float


class CoercivityReport(TypedDict):
    """Quadratic-form audit of L_k over random test functions."""

    k: int
    B: float
    samples: int
    skipped: int
    c0_min: float
    accretivity_min: float
    identity_residual_max: float
    identity_relative_max: float
    l2_ratio_max: float
    h1_ratio_max: float


class ShiftedResolventReport(TypedDict):
    """Empirical constants of the shifted H^{-1} resolvent bounds."""

    k: int
    B: float
    c2: float
    samples: int
    skipped: int
    constant_max: float
    weighted_constant_max: float
    lambdas: list[float]


class GearhartPruessReport(TypedDict):
    """Comparison of sampled semigroup norms with e^{-tau psi + pi/2}."""

    k: int
    B: float
    psi: float
    trajectories: int
    times: list[float]
    max_ratio: list[float]
    bound: list[float]
    passed: list[bool]
    all_passed: bool
    fit: DecayFit


class SpacetimeReport(TypedDict):
    """Space-time norms of an exponentially weighted trajectory."""

    k: int
    B: float
    c_prime: float
    initial_norm: float
    norms: dict[str, float]
    ratios: dict[str, float]
    flags: list[str]


class EllipticAuditReport(TypedDict):
    """Empirical constants of the five weighted elliptic bounds."""

    k: int
    beta: float
    samples: int
    constants: dict[str, float]
    coercivity_checked: bool
    coercivity_margin_min: float


class ModeEnergy(TypedDict):
    k: int
    components: dict[str, float]
    total: float


class EnergyReport(TypedDict):
    """Energy functionals of a simulated trajectory.

    Attributes:
        c: exponent constant of the weights e^{c |kB|^{1/3} tau}
        modes: per-mode E_k breakdown keyed by str(k)
        zero_mode: E_0 breakdown
        totals: "nonzero" (sum of E_k), "zero" (E_0), "total"
        decay_fits: fitted L2 decay per mode keyed by str(k)
        flags: e.g. "blow-up"
    """

    B: float
    c: float
    modes: dict[str, ModeEnergy]
    zero_mode: ModeEnergy
    totals: dict[str, float]
    decay_fits: dict[str, DecayFit]
    flags: list[str]


class PhysicalReport(TypedDict):
    """Physical-variable norms of a mode state."""

    tau: float
    m_norms: dict[str, float]
    m_norms_over_r: dict[str, float]
    script_e: float
    l1_bound: float
    l1_direct: float
    moments: dict[str, float]


class SweepRow(TypedDict):
    B: float
    amplitude: float
    verdict: Verdict
    rate: float
    final_ratio: float
    tau_reached: float


class SweepTable(TypedDict):
    rows: list[SweepRow]
    thresholds: dict[str, float]
    slope: float
    flags: list[str]


class GlobalDecayReport(TypedDict):
    """Run at a fraction of the located threshold.

    Attributes:
        threshold: largest decaying amplitude of the sweep (0 if none decayed)
        amplitude: initial ring size of the checked run
        tau_end: run length, tau_rates / rate
        final_ratio: final to initial sum of nonzero-mode norms
        energy_total: sum of E_k and E_0 of the checked run
    """

    B: float
    K: int
    rate: float
    threshold: float
    amplitude: float
    tau_end: float
    verdict: Verdict
    final_ratio: float
    energy_total: float
    passed: bool


class InterpolationReport(TypedDict):
    samples: int
    a2_ratio_max: float
    a2_passed: bool
    a3_constants: dict[str, float]
    extremal_ratios: dict[str, float]


class FactorizationReport(TypedDict):
    samples: int
    pointwise_residual_max: float
    ground_state_residual: float
    quadratic_residual_max: float
    quadratic_relative_max: float


class AuditOutcome(TypedDict):
    name: str
    passed: bool
    details: dict[str, float | int | str | bool]


class SpectrumCheck(TypedDict):
    """Lowest eigenvalues of a non-rotating operator against (|k| + 2m) / 2."""

    k: int
    computed: list[float]
    expected: list[float]
    max_error: float
