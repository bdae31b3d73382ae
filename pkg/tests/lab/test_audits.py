"""Tests for the verification audit battery."""

import pytest

from tc_lab.services.audits import AuditBattery, failed
from tc_shared.errors import ConfigurationError, SolverError


@pytest.fixture
def battery():
    return AuditBattery("quick")


class TestAuditBattery:
    """Tests for AuditBattery."""

    def test_unknown_profile(self):
        """Test that an unknown profile raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            AuditBattery("thorough")

    def test_profile_grid(self, battery):
        """Test that the quick profile builds its 256-node grid."""
        assert battery.grid.n == 256
        assert battery.grid.r_max == 20.0

    def test_audit_names_are_unique(self, battery):
        """Test that every audit is listed once."""
        names = [name for name, _ in battery.audits()]

        assert len(names) == len(set(names)) == 16

    def test_errors_become_failed_outcomes(self, battery, monkeypatch):
        """Test that a raising audit is reported as failed instead of aborting."""

        def broken():
            raise SolverError("singular system")

        monkeypatch.setattr(battery, "audits", lambda: [("broken", broken)])

        outcomes = battery.run()

        assert outcomes == [failed("broken", SolverError("singular system"))]
        assert outcomes[0]["details"]["error"] == "singular system"

    def test_psi_scanned_once_per_case(self, battery, monkeypatch):
        """Test that audits sharing a (k, B) pair reuse one scan."""
        # Arrange
        calls = []
        monkeypatch.setattr(
            "tc_lab.services.audits.pseudospectral_bound",
            lambda op, config, logger=None: calls.append(op.k) or {"psi": 2.5},
        )

        # Act
        first = battery._psi(1, 1e3)
        second = battery._psi(1, 1000)

        # Assert
        assert first == second == 2.5
        assert calls == [1]


class TestIndividualAudits:
    """Tests for the cheaper audits of the quick profile."""

    def test_interaction_inequality(self, battery):
        """Test the subadditivity audit."""
        outcome = battery.interaction_inequality()

        assert outcome["passed"]
        assert outcome["details"]["violations"] == 0

    def test_riccati(self, battery):
        """Test the Riccati audit: crossings found where expected, power law exact."""
        outcome = battery.riccati()

        assert outcome["passed"], outcome["details"]
        assert outcome["details"]["A2_B-3_crossing_found"] == pytest.approx(
            outcome["details"]["A2_B-3_crossing_expected"], rel=1e-2
        )

    def test_physical_translation(self, battery):
        """Test the weight cancellation and the L1 bound."""
        outcome = battery.physical_translation()

        assert outcome["passed"], outcome["details"]

    def test_linearization_limit(self, battery):
        """Test that tiny data follow the linear flow and the pairing holds."""
        outcome = battery.linearization()

        assert outcome["passed"], outcome["details"]
        assert outcome["details"]["relative_gap"] < 1e-10
