"""Tests for the radial grid, its stencils and norms."""

import numpy as np
import pytest

from tc_shared.errors import ConfigurationError, OperatorError
from tc_shared.grid import GridFunction, GridScheme, NormKind, build_grid, differentiate, norm


@pytest.fixture
def grid():
    return build_grid(64, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestBuildGrid:
    """Tests for build_grid and the grid geometry."""

    def test_uniform_nodes_are_cell_centres(self):
        """Test that 16 cells on (0, 8] put the nodes at 0.25, 0.75, ..., 7.75."""
        grid = build_grid(16, 8.0)

        assert grid.n == 16
        assert grid.nodes == pytest.approx(0.25 + 0.5 * np.arange(16))

    def test_weights_sum_to_r_max(self):
        """Test that the quadrature weights are cell widths summing to r_max."""
        for scheme in ("uniform", "stretched"):
            grid = build_grid(100, 20.0, scheme)
            assert np.all(grid.weights > 0.0)
            assert np.sum(grid.weights) == pytest.approx(20.0, rel=1e-13)

    def test_stretched_grid_clusters_at_origin(self):
        """Test that the stretched scheme puts its smallest cells near r = 0."""
        grid = build_grid(128, 20.0, GridScheme.STRETCHED)
        spec = grid.describe()

        assert spec["scheme"] == "stretched"
        assert grid.weights[0] == pytest.approx(spec["h_min"])
        assert spec["h_min"] < spec["h_max"]
        assert np.all(np.diff(grid.nodes) > 0.0)

    def test_describe_fields(self, grid):
        """Test the JSON grid description."""
        spec = grid.describe()

        assert spec == {"n": 64, "r_max": 8.0, "scheme": "uniform", "h_min": pytest.approx(0.125), "h_max": pytest.approx(0.125)}

    @pytest.mark.parametrize("n", [0, 15, 32.5])
    def test_invalid_cell_count_rejected(self, n):
        """Test that too few or non-integer cells raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            build_grid(n, 10.0)

    @pytest.mark.parametrize("r_max", [0.0, -1.0, np.inf, np.nan])
    def test_invalid_r_max_rejected(self, r_max):
        """Test that a non-positive or non-finite r_max raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            build_grid(64, r_max)


class TestStencils:
    """Tests for the first and second derivative stencils."""

    def test_second_derivative_of_quadratic(self, grid):
        """Test that D2 reproduces (r^2)'' = 2 on interior nodes of a uniform grid."""
        r = grid.nodes

        d2 = grid.d2 @ r**2

        assert d2[1:-1] == pytest.approx(np.full(grid.n - 2, 2.0), rel=1e-9)

    def test_second_derivative_is_self_adjoint(self, grid, rng):
        """Test that <D2 f, v> = <f, D2 v> in the grid inner product."""
        f = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)

        left = grid.inner(grid.d2 @ f, v)
        right = grid.inner(f, grid.d2 @ v)

        assert abs(left - right) <= 1e-12 * abs(left)

    def test_first_derivative_is_skew(self, rng):
        """Test that <D1 f, v> = -<f, D1 v> to round-off, also on a stretched grid."""
        grid = build_grid(80, 10.0, "stretched")
        f = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)

        left = grid.inner(grid.d1 @ f, v)
        right = -grid.inner(f, grid.d1 @ v)

        assert abs(left - right) <= 1e-12 * abs(left)

    def test_first_derivative_of_smooth_function(self):
        """Test that D1 is second-order accurate in the interior."""
        errors = []
        for n in (200, 400):
            grid = build_grid(n, 10.0)
            r = grid.nodes
            d1 = grid.d1 @ np.sin(r)
            errors.append(np.max(np.abs(d1 - np.cos(r))[1:-1]))

        assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.1)

    def test_differentiate_rejects_third_order(self, grid):
        """Test that only first and second derivatives are available."""
        f = GridFunction.zeros(grid)

        with pytest.raises(OperatorError):
            differentiate(f, 3)

    def test_differentiate_matches_stencil(self, grid):
        """Test that differentiate applies the cached sparse stencils."""
        f = GridFunction(grid, np.sin(grid.nodes))

        assert differentiate(f, 2).values == pytest.approx(grid.d2 @ f.values)


class TestNorms:
    """Tests for the quadrature norms."""

    def test_l2_norm_of_constant(self, grid):
        """Test that ||1||_L2 = sqrt(r_max)."""
        assert grid.norm_of(np.ones(grid.n), NormKind.L2) == pytest.approx(np.sqrt(8.0))

    def test_x_norm_of_identity_on_unit_interval(self):
        """Test that ||r||_X on (0, 1] is 1, the integral of 1 over (0, 1]."""
        grid = build_grid(64, 1.0)

        assert grid.norm_of(grid.nodes, NormKind.X) == pytest.approx(1.0, rel=1e-12)

    def test_h1_dominates_l2_and_hm1(self, grid, rng):
        """Test ||f||_Hm1 <= ||f||_L2 <= ||f||_H1."""
        f = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)

        hm1 = grid.norm_of(f, NormKind.HM1)
        l2 = grid.norm_of(f, NormKind.L2)
        h1 = grid.norm_of(f, NormKind.H1)

        assert hm1 <= l2 * (1.0 + 1e-12)
        assert l2 <= h1

    def test_m_norm_cancels_similarity_weight(self, rng):
        """Test that ||f w||_M equals ||w||_L2 for the similarity weight f."""
        grid = build_grid(256, 20.0)
        w = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)

        m_norm = grid.norm_of(grid.fweight * w, NormKind.M)

        assert m_norm == pytest.approx(grid.norm_of(w, NormKind.L2), rel=1e-12)

    def test_norm_accepts_kind_names(self, grid):
        """Test that norm() takes either a NormKind or its string value."""
        f = GridFunction(grid, np.exp(-grid.nodes))

        assert norm(f, "X") == norm(f, NormKind.X)
        assert f.norm() == norm(f, NormKind.L2)


class TestGridFunction:
    """Tests for GridFunction validation."""

    def test_wrong_length_rejected(self, grid):
        """Test that values of the wrong length raise OperatorError."""
        with pytest.raises(OperatorError):
            GridFunction(grid, np.zeros(grid.n + 1))

    def test_non_finite_rejected(self, grid):
        """Test that NaN entries raise OperatorError."""
        values = np.zeros(grid.n)
        values[3] = np.nan

        with pytest.raises(OperatorError):
            GridFunction(grid, values)

    def test_values_are_read_only(self, grid):
        """Test that grid function values cannot be modified in place."""
        f = GridFunction.zeros(grid)

        assert f.is_zero()
        with pytest.raises(ValueError):
            f.values[0] = 1.0
