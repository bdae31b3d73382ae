"""Tests for the base-flow parameters and lab defaults."""

import math

import pytest

from tc_shared.errors import ConfigurationError
from tc_shared.physics import AUDIT_PROFILES, GP_PREFACTOR, FlowParams


class TestFlowParams:
    """Tests for the FlowParams dataclass."""

    def test_from_B(self):
        """Test that from_B sets A2 = B nu."""
        params = FlowParams.from_B(250.0, nu=0.5)

        assert params.A2 == 125.0
        assert params.B == 250.0
        assert params.beta(-3) == -750.0

    def test_rotating_regime(self):
        """Test the |B| >= 1 gate of the nonlinear runs."""
        FlowParams.from_B(-1.0).require_rotating_regime()

        with pytest.raises(ConfigurationError):
            FlowParams.from_B(0.5).require_rotating_regime()

    @pytest.mark.parametrize(
        "kwargs",
        [{"nu": 0.0}, {"nu": -1.0}, {"A2": float("nan")}, {"A1": float("inf")}],
    )
    def test_invalid_values_rejected(self, kwargs):
        """Test that a non-positive viscosity or non-finite coefficient raises."""
        with pytest.raises(ConfigurationError):
            FlowParams(**kwargs)

    def test_describe(self):
        """Test the echoed parameter dictionary."""
        assert FlowParams(A1=1.0, A2=4.0, nu=2.0).describe() == {
            "A1": 1.0,
            "A2": 4.0,
            "nu": 2.0,
            "B": 2.0,
        }


class TestLabDefaults:
    """Tests for the shared defaults table."""

    def test_gearhart_pruess_prefactor(self):
        """Test that the semigroup prefactor is e^{pi/2}."""
        assert GP_PREFACTOR == pytest.approx(math.exp(math.pi / 2.0))

    def test_audit_profiles(self):
        """Test that both audit profiles exist and the quick one is smaller."""
        quick, full = AUDIT_PROFILES["quick"], AUDIT_PROFILES["full"]

        assert quick["n"] < full["n"]
        assert quick["samples"] <= full["samples"]
        assert quick["green_n"] == 1024
        assert full["identity_rel_tol"] == 1e-3
        assert quick["identity_rel_tol"] > full["identity_rel_tol"]
        assert quick["scan_points"] <= full["scan_points"]
        assert quick["scaling_n"] == full["scaling_n"] == 1024
