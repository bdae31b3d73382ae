"""Tests for the fitted stream-function solver and its elliptic diagnostics."""

import numpy as np
import pytest

from tc_lab.core.stream import (
    StreamSolver,
    branch_difference,
    coercivity_check,
    elliptic_estimate_audit,
    homogeneous_residual,
    manufactured_pair,
    solve_stream,
    stream_residual,
    zero_mode_velocity,
)
from tc_lab.services.oracles import manufactured_error, stream_oracle_error
from tc_shared.errors import ConfigurationError, OperatorError
from tc_shared.grid import GridFunction, build_grid, ring_profile


@pytest.fixture
def grid():
    return build_grid(512, 20.0)


@pytest.fixture
def solver(grid):
    return StreamSolver(grid)


class TestBranches:
    """Tests for the homogeneous branch helpers."""

    def test_branch_difference_is_antisymmetric(self):
        """Test D(x, y) = -D(y, x) and D(x, x) = 0."""
        x = np.array([0.5, 1.0, 3.0])
        y = np.array([2.0, 1.0, 0.7])

        assert branch_difference(x, y, 2.0) == pytest.approx(-branch_difference(y, x, 2.0))
        assert branch_difference(x, x, 2.0) == pytest.approx(0.0)

    def test_plain_stencil_on_regular_branch(self, grid):
        """Test that the three-point stencil nearly annihilates r^{1/2+|k|}."""
        assert homogeneous_residual(grid, 1) < 1e-3


class TestStreamSolver:
    """Tests for StreamSolver.solve."""

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_manufactured_solution(self, grid, solver, k):
        """Test that phi* = r^{1/2+|k|} e^{-r^2/4} is recovered."""
        assert manufactured_error(grid, k, solver=solver) < 1e-4

    def test_refinement_reduces_error(self):
        """Test that halving the cells lowers the manufactured error."""
        coarse = manufactured_error(build_grid(128, 20.0), 2)
        fine = manufactured_error(build_grid(256, 20.0), 2)

        assert fine < coarse

    def test_agrees_with_green_quadrature(self):
        """Test the banded solve against the free-space Green's function."""
        assert stream_oracle_error(build_grid(256, 20.0), 1) < 1e-4

    def test_sign_of_mode_does_not_matter(self, grid, solver):
        """Test that modes k and -k share the stream function."""
        w = ring_profile(grid, 2)

        plus = solver.solve(w, 2)
        minus = solver.solve(w, -2)

        assert np.array_equal(plus.phi.values, minus.phi.values)
        assert minus.k == -2

    def test_solve_is_linear(self, grid, solver):
        """Test that doubling the vorticity doubles the stream function."""
        w = ring_profile(grid, 1).values * (1.0 + 0.5j)

        single = solver.solve(w, 1).phi.values
        double = solver.solve(2.0 * w, 1).phi.values

        assert double == pytest.approx(2.0 * single)

    def test_breve_is_scaled_phi(self, grid, solver):
        """Test phi_breve = phi / r^{1/2}."""
        pair = solver.solve(ring_profile(grid, 1), 1)

        assert pair.phi_breve.values == pytest.approx(pair.phi.values / np.sqrt(grid.nodes))

    def test_zero_mode_rejected(self, grid, solver):
        """Test that k = 0 raises OperatorError."""
        with pytest.raises(OperatorError):
            solver.solve(ring_profile(grid, 0), 0)

    def test_wrong_length_rejected(self, solver):
        """Test that a right-hand side of the wrong size raises OperatorError."""
        with pytest.raises(OperatorError):
            solver.solve(np.ones(7), 1)

    def test_plain_stencil_residual_is_small(self, grid):
        """Test that the fitted solution satisfies the plain stencil to O(h^2)."""
        w = ring_profile(grid, 2)

        pair = solve_stream(w, 2)

        assert stream_residual(pair, w) < 1e-2

    def test_manufactured_pair_matches_equation(self, grid):
        """Test that the manufactured source satisfies the equation pointwise."""
        r = grid.nodes
        phi, w = manufactured_pair(grid, 1)
        # phi'' of r^{3/2} e^{-r^2/4} in closed form
        second = (0.75 / r**2 - 2.0 + r**2 / 4.0) * phi

        assert second - 0.75 * phi / r**2 == pytest.approx(np.exp(-(r**2) / 8.0) * w)


class TestZeroModeVelocity:
    """Tests for zero_mode_velocity."""

    def test_closed_form(self, grid):
        """Test the running integral on w0 = r^{1/2} e^{-r^2/8}."""
        r = grid.nodes
        w0 = np.sqrt(r) * np.exp(-(r**2) / 8.0)
        exact = 2.0 * (1.0 - np.exp(-(r**2) / 4.0)) / r

        velocity = zero_mode_velocity(w0, grid)

        window = r >= 1.0
        assert velocity[window] == pytest.approx(exact[window], rel=1e-3)

    def test_zero_data(self, grid):
        """Test that zero data give zero velocity."""
        assert not np.any(zero_mode_velocity(GridFunction.zeros(grid), grid))


class TestEllipticEstimates:
    """Tests for coercivity_check and elliptic_estimate_audit."""

    def test_coercivity_margin_nonnegative(self, grid, solver):
        """Test the Hardy-sharp lower bound at beta = 0 on a ring."""
        w = ring_profile(grid, 1)

        margin = coercivity_check(solver.solve(w, 1), w, 0.0)

        assert margin >= -0.05

    def test_coercivity_needs_small_beta(self, grid, solver):
        """Test that |beta| >= 2|k| raises ConfigurationError."""
        w = ring_profile(grid, 1)

        with pytest.raises(ConfigurationError):
            coercivity_check(solver.solve(w, 1), w, 2.0)

    def test_audit_records_constants(self, grid, solver):
        """Test that the audit reports five positive constants."""
        report = elliptic_estimate_audit(
            grid, 2, 1.0, 3, rng=np.random.default_rng(4), solver=solver
        )

        assert report["samples"] == 3
        assert set(report["constants"]) == {"second", "first", "zero", "first_sup", "zero_sup"}
        assert all(v > 0.0 for v in report["constants"].values())
        assert report["coercivity_checked"]

    def test_audit_skips_coercivity_outside_range(self, grid, solver):
        """Test that beta = -4 at k = 1 records no coercivity margin."""
        report = elliptic_estimate_audit(
            grid, 1, -4.0, 2, rng=np.random.default_rng(4), solver=solver
        )

        assert not report["coercivity_checked"]
        assert report["coercivity_margin_min"] == 0.0

    def test_unsupported_beta(self, grid):
        """Test that a beta outside the supported set raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            elliptic_estimate_audit(grid, 1, 0.5, 1)
