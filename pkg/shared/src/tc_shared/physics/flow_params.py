"""Physical parameters of the Taylor-Couette base flow v = A1 r + A2 / r."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError


@dataclass(frozen=True)
class FlowParams:
    """Base-flow coefficients and the derived rotation ratio B = A2 / nu.

    A1 only enters through the phase e^{ik A1 e^tau}, which is factored out of
    the evolved variable, and through the translation back to physical vorticity.
    """

    A1: float = 0.0
    A2: float = 1.0
    nu: float = 1.0

    def __post_init__(self) -> None:
        if not self.nu > 0.0:
            raise ConfigurationError(f"nu must be > 0, not {self.nu}")
        for name in ("A1", "A2", "nu"):
            value = getattr(self, name)
            if value != value or abs(value) == float("inf"):
                raise ConfigurationError(f"{name} must be finite, not {value}")

    @classmethod
    def from_B(cls, B: float, *, nu: float = 1.0, A1: float = 0.0) -> FlowParams:
        return cls(A1=A1, A2=float(B) * nu, nu=nu)

    @property
    def B(self) -> float:
        return self.A2 / self.nu

    def beta(self, k: int) -> float:
        """Mode-wise rotation strength beta_k = k B."""
        return float(k) * self.B

    @property
    def in_rotating_regime(self) -> bool:
        """True when |A2| >= nu, the regime the stability estimates address."""
        return abs(self.B) >= 1.0

    def require_rotating_regime(self) -> None:
        if not self.in_rotating_regime:
            raise ConfigurationError(
                f"|B| = |A2/nu| must be >= 1 for nonlinear runs, not {abs(self.B):g}"
            )

    def describe(self) -> dict[str, float]:
        return {"A1": self.A1, "A2": self.A2, "nu": self.nu, "B": self.B}
