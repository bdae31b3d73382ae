"""Tests for the energy functionals and the physical translation."""

import numpy as np
import pytest

from tc_lab.core.energy import (
    energy_Ek,
    fitted_weight_constant,
    gaussian_moments,
    initial_size,
    interaction_inequality_audit,
    mode_energy,
    physical_energy,
    physical_vorticity,
    translate_physical,
)
from tc_lab.core.nonlinear import ModeState, SimulationConfig, integrate
from tc_shared.errors import ConfigurationError
from tc_shared.grid import NormKind, build_grid, ring_profile
from tc_shared.physics import FlowParams


@pytest.fixture
def grid():
    return build_grid(128, 20.0)


@pytest.fixture
def params():
    return FlowParams.from_B(1e3)


@pytest.fixture
def state(grid, params):
    return ModeState.from_profiles(
        grid,
        params,
        {0: ring_profile(grid, 0), 1: ring_profile(grid, 1), 2: ring_profile(grid, 2, amplitude=0.5)},
        K=2,
    )


class TestModeEnergy:
    """Tests for mode_energy and energy_Ek."""

    def test_constant_state_without_weight(self, grid):
        """Test the components of a state frozen in time with c = 0."""
        w = ring_profile(grid, 1).values
        times = np.linspace(0.0, 4.0, 5)
        states = np.tile(w, (5, 1))

        energy = mode_energy(grid, times, states, 1, 64.0, 0.0)

        components = energy["components"]
        assert components["LinfL2"] == pytest.approx(1.0)
        # |kB|^{1/6} = 2 and the time L2 norm of a constant is sqrt(T) = 2
        assert components["L2L2"] == pytest.approx(4.0)
        assert energy["total"] == pytest.approx(sum(components.values()))

    def test_report_of_short_run(self, state):
        """Test that energy_Ek covers every mode and doubles the nonzero total."""
        trajectory = integrate(state, SimulationConfig(K=2, dt=0.01, tau_end=0.1))

        report = energy_Ek(trajectory, 0.1)

        assert set(report["modes"]) == {"1", "2"}
        nonzero = 2.0 * sum(m["total"] for m in report["modes"].values())
        assert report["totals"]["nonzero"] == pytest.approx(nonzero)
        assert report["totals"]["total"] == pytest.approx(nonzero + report["zero_mode"]["total"])
        assert set(report["decay_fits"]) == {"1", "2"}
        assert report["flags"] == []

    def test_weight_increases_energy(self, state):
        """Test that a positive weight constant cannot lower the energy."""
        trajectory = integrate(state, SimulationConfig(K=2, dt=0.01, tau_end=0.1))

        plain = energy_Ek(trajectory, 0.0)
        weighted = energy_Ek(trajectory, 0.5)

        assert weighted["totals"]["nonzero"] >= plain["totals"]["nonzero"]
        assert weighted["zero_mode"] == plain["zero_mode"]

    def test_fitted_weight_constant(self, grid, params):
        """Test that the fitted c is a positive fraction of the scaled linear rate."""
        c, fit = fitted_weight_constant(grid, params, 1.0, 0.01, fraction=0.5)

        assert fit["rate"] > 0.0
        assert c == pytest.approx(0.5 * fit["rate"] / 10.0)

    def test_fit_needs_positive_length(self, grid, params):
        """Test that tau_end = 0 raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            fitted_weight_constant(grid, params, 0.0, 0.01)


class TestPhysicalTranslation:
    """Tests for translate_physical and friends."""

    def test_weights_cancel(self, state):
        """Test that ||f w_k||_M equals ||w_k||_L2 for every mode."""
        report = translate_physical(state)

        l2 = state.norms(NormKind.L2)
        x = state.norms(NormKind.X)
        for k in range(3):
            assert report["m_norms"][str(k)] == pytest.approx(l2[k], rel=1e-10)
            assert report["m_norms_over_r"][str(k)] == pytest.approx(x[k], rel=1e-10)

    def test_direct_l1_below_bound(self, state):
        """Test that the quadrature L1 norm respects the moment bound."""
        report = translate_physical(state)

        assert 0.0 < report["l1_direct"] <= report["l1_bound"]
        assert physical_energy(state) == pytest.approx(report["script_e"])

    def test_vorticity_is_real_field(self, state):
        """Test the physical vorticity grid shape and its angular mean."""
        theta, values = physical_vorticity(state, angles=32)

        assert theta.shape == (32,)
        assert values.shape == (state.grid.n, 32)
        mean = np.mean(values, axis=1)
        assert mean == pytest.approx(state.grid.fweight * state.values[0].real)

    def test_gaussian_moments(self):
        """Test the two Gaussian moments against 8 and 2."""
        moments = gaussian_moments()

        assert moments["r3"] == pytest.approx(8.0)
        assert moments["r1"] == pytest.approx(2.0)
        assert moments["r3_error"] < 1e-8 and moments["r1_error"] < 1e-8


class TestInitialSize:
    """Tests for initial_size."""

    def test_zero_state(self, grid, params):
        """Test that the zero state has size 0."""
        size = initial_size(ModeState.zeros(grid, params, K=2))

        assert size == {"size": 0.0, "ratio": 0.0}

    def test_ratio_scales_with_rotation(self, state):
        """Test that the ratio is the size over |B|^{1/3}."""
        size = initial_size(state)

        assert size["size"] > 0.0
        assert size["ratio"] == pytest.approx(size["size"] / 10.0)


class TestInteractionInequality:
    """Tests for interaction_inequality_audit."""

    def test_no_violations(self):
        """Test the subadditivity of |k|^{1/3} over every truncated pair."""
        report = interaction_inequality_audit(8)

        assert report["violations"] == 0
        assert report["pairs"] > 0
        assert report["min_slack"] >= 0.0

    def test_pair_count(self):
        """Test the number of pairs with |k|, |l|, |k - l| <= 1."""
        assert interaction_inequality_audit(1)["pairs"] == 7

    def test_truncation_checked(self):
        """Test that K = 0 raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            interaction_inequality_audit(0)
