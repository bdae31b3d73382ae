"""Tests for the mode-coupled nonlinear evolution."""

import numpy as np
import pytest

from tc_lab.core.nonlinear import (
    IMEXStepper,
    ModeState,
    SimulationConfig,
    assemble_f1_f2,
    integrate,
    interaction_pairing,
    simulate,
    step,
)
from tc_lab.core.semigroup import propagate_linear
from tc_shared.errors import ConfigurationError, OperatorError
from tc_shared.grid import NormKind, build_grid, ring_profile
from tc_shared.operators import assemble_Lk
from tc_shared.physics import FlowParams


@pytest.fixture
def grid():
    return build_grid(128, 20.0)


@pytest.fixture
def params():
    return FlowParams.from_B(1e3)


class TestModeState:
    """Tests for ModeState construction and access."""

    def test_zero_mode_is_made_real(self, grid, params):
        """Test that the imaginary part of w_0 is dropped."""
        values = np.zeros((3, grid.n), dtype=complex)
        values[0] = 1.0 + 1.0j

        state = ModeState(grid, values, params)

        assert np.all(state.values[0] == 1.0)

    def test_negative_modes_are_conjugates(self, grid, params):
        """Test that w_{-k} is the complex conjugate of w_k."""
        state = ModeState.ring(grid, params, 1.0, modes=(1,), K=2)
        shifted = ModeState.from_profiles(
            grid, params, {1: state.values[1] * 1j}, K=2
        )

        assert np.array_equal(shifted.mode(-1).values, np.conj(shifted.mode(1).values))
        assert len(shifted.modes) == 5

    def test_profile_for_negative_mode(self, grid, params):
        """Test that a profile given for -k fills w_k with its conjugate."""
        profile = ring_profile(grid, 1).values * 1j

        state = ModeState.from_profiles(grid, params, {-1: profile}, K=2)

        assert np.array_equal(state.values[1], np.conj(profile))

    def test_values_are_read_only(self, grid, params):
        """Test that the stored mode array cannot be modified."""
        state = ModeState.zeros(grid, params, K=2)

        with pytest.raises(ValueError):
            state.values[1, 0] = 1.0

    def test_shape_checked(self, grid, params):
        """Test that a mode array of the wrong width raises OperatorError."""
        with pytest.raises(OperatorError):
            ModeState(grid, np.zeros((3, grid.n + 1)), params)

    def test_truncation_checked(self, grid, params):
        """Test that K < 1 and out-of-range modes are refused."""
        with pytest.raises(ConfigurationError):
            ModeState.zeros(grid, params, K=0)
        with pytest.raises(ConfigurationError):
            ModeState.from_profiles(grid, params, {3: ring_profile(grid, 3)}, K=2)
        with pytest.raises(OperatorError):
            ModeState.zeros(grid, params, K=2).mode(3)

    def test_ring_amplitudes(self, grid, params):
        """Test that each ring mode carries the requested L2 size."""
        state = ModeState.ring(grid, params, 0.5, modes=(1, 2), K=3)

        assert state.norms() == pytest.approx([0.0, 0.5, 0.5, 0.0])
        assert state.nonzero_norm() == pytest.approx(1.0)


class TestInteraction:
    """Tests for the quadratic interaction terms."""

    def test_single_mode_does_not_force_itself(self, grid, params):
        """Test that a lone k = 1 mode produces no k = 1 forcing but does force k = 2."""
        state = ModeState.ring(grid, params, 1.0, modes=(1,), K=2)

        f1, f2 = assemble_f1_f2(state, 1)
        g1, g2 = assemble_f1_f2(state, 2)

        assert not np.any(f1.values) and not np.any(f2.values)
        assert np.any(g1.values) and np.any(g2.values)

    def test_negative_mode_forcing_is_conjugate(self, grid, params):
        """Test that the forcing of mode -k is the conjugate of that of mode k."""
        state = ModeState.ring(grid, params, 1.0, modes=(1, 2), K=2)

        f1, f2 = assemble_f1_f2(state, 2)
        g1, g2 = assemble_f1_f2(state, -2)

        assert np.array_equal(g1.values, np.conj(f1.values))
        assert np.array_equal(g2.values, np.conj(f2.values))

    def test_pairing_by_parts(self, grid, params):
        """Test that moving the derivative onto w_k changes nothing but round-off."""
        state = ModeState.ring(grid, params, 1.0, modes=(1, 2), K=2)

        pairing = interaction_pairing(state)

        assert pairing["difference"] <= 1e-8 * max(abs(pairing["direct"]), 1.0)


class TestStepping:
    """Tests for IMEXStepper, step and integrate."""

    def test_zero_state_stays_zero(self, grid, params):
        """Test that the zero state is a fixed point."""
        state = step(ModeState.zeros(grid, params, K=2), 0.01)

        assert not np.any(state.values)
        assert state.tau == pytest.approx(0.01)

    def test_stepper_checks_truncation(self, grid, params):
        """Test that a stepper refuses states of another truncation."""
        with IMEXStepper(grid, params, 2, 0.01) as stepper:
            with pytest.raises(OperatorError):
                stepper.step(ModeState.zeros(grid, params, K=3))

    def test_small_data_follow_linear_evolution(self, grid, params):
        """Test that tiny data evolve like the linear mode equation."""
        init = ModeState.ring(grid, params, 1e-8, modes=(1,), K=2)

        trajectory = integrate(init, SimulationConfig(K=2, dt=1e-3, tau_end=0.05))
        linear = propagate_linear(assemble_Lk(grid, 1, params), init.mode(1), 0.05, 1e-3)

        final = linear.states[-1]
        gap = grid.norm_of(trajectory.final.mode(1).values - final, NormKind.L2)
        assert gap / grid.norm_of(final, NormKind.L2) < 1e-10

    def test_samples_and_flags(self, grid, params):
        """Test the stored samples of a short run with two interacting modes."""
        init = ModeState.ring(grid, params, 1e-2, modes=(1, 2), K=2)

        trajectory = integrate(init, SimulationConfig(K=2, dt=0.01, tau_end=0.1, stride=5))

        assert trajectory.times == pytest.approx([0.0, 0.05, 0.1])
        assert trajectory.states.shape == (3, 3, grid.n)
        assert not trajectory.blew_up
        assert trajectory.reality_defect < 1e-10
        assert trajectory.nonzero_norms()[-1] < trajectory.nonzero_norms()[0]

    def test_workers_do_not_change_states(self, grid, params):
        """Test that threaded per-mode solves give identical states."""
        init = ModeState.ring(grid, params, 1e-1, modes=(1,), K=2)

        serial = integrate(init, SimulationConfig(K=2, dt=0.01, tau_end=0.05))
        threaded = integrate(init, SimulationConfig(K=2, dt=0.01, tau_end=0.05, workers=2))

        assert np.array_equal(serial.states, threaded.states)

    def test_truncation_mismatch(self, grid, params):
        """Test that a config K different from the state's raises ConfigurationError."""
        init = ModeState.zeros(grid, params, K=2)

        with pytest.raises(ConfigurationError):
            integrate(init, SimulationConfig(K=3))

    def test_mode_trajectory_of_negative_mode(self, grid, params):
        """Test that the -k trajectory is the conjugate of the k trajectory."""
        init = ModeState.ring(grid, params, 1e-2, modes=(1,), K=2)
        trajectory = integrate(init, SimulationConfig(K=2, dt=0.01, tau_end=0.02))

        plus = trajectory.mode_trajectory(1)
        minus = trajectory.mode_trajectory(-1)

        assert np.array_equal(minus.states, np.conj(plus.states))
        assert plus.B == 1e3
        assert trajectory.mode_trajectory(0).B == 0.0


class TestSimulationConfig:
    """Tests for SimulationConfig validation and simulate."""

    @pytest.mark.parametrize(
        "kwargs",
        [{"K": 0}, {"dt": 0.0}, {"tau_end": -1.0}, {"stride": 0}, {"workers": 0}, {"blowup_growth": 1.0}],
    )
    def test_invalid_values(self, kwargs):
        """Test that invalid knobs raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            SimulationConfig(**kwargs)

    def test_needs_rotating_regime(self, grid):
        """Test that |B| < 1 is refused."""
        init = ModeState.zeros(grid, FlowParams.from_B(0.5), K=2)

        with pytest.raises(ConfigurationError):
            simulate(init, SimulationConfig(K=2, tau_end=0.01, dt=0.005))

    def test_zero_data_have_zero_energy(self, grid, params):
        """Test that a zero state gives zero energies with an explicit c."""
        init = ModeState.zeros(grid, params, K=2)

        trajectory, report = simulate(init, SimulationConfig(K=2, tau_end=0.02, dt=0.01, c=0.1))

        assert report["totals"]["total"] == 0.0
        assert report["c"] == 0.1
        assert len(trajectory.times) == 3
