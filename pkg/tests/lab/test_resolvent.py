"""Tests for the resolvent scans, the norm pairs and the sharpness witness."""

import dataclasses

import numpy as np
import pytest

from tc_lab.core.resolvent import (
    ScanConfig,
    bisect_c2,
    coarse_shifts,
    pseudospectral_bound,
    psi_scaling,
    resolvent_norm_at,
    scaling_fit,
    sharpness_witness,
    shifted_resolvent_audit,
)
from tc_lab.core.singular import NormPair, sigma_min
from tc_shared.errors import ConfigurationError, OperatorError, ResolutionError
from tc_shared.grid import build_grid
from tc_shared.operators import assemble_Lk
from tc_shared.physics import FlowParams


@pytest.fixture
def grid():
    return build_grid(128, 20.0)


@pytest.fixture
def rotating(grid):
    return assemble_Lk(grid, 1, FlowParams.from_B(100.0))


class TestSigmaMin:
    """Tests for sigma_min through resolvent_norm_at."""

    def test_self_adjoint_value_is_lowest_eigenvalue(self):
        """Test that sigma_min(L_1) at B = 0 and s = 0 is the ground energy 1/2."""
        grid = build_grid(256, 20.0)
        op = assemble_Lk(grid, 1, FlowParams.from_B(0.0))

        estimate = resolvent_norm_at(op, 0.0)

        assert estimate.method == "dense"
        assert estimate.value == pytest.approx(0.5, abs=2e-2)

    @pytest.mark.parametrize("pair", ["L2", "X"])
    def test_lanczos_matches_dense(self, rotating, pair):
        """Test that inverse Lanczos reproduces the dense singular value."""
        dense = resolvent_norm_at(rotating, 10.0, pair, method="dense")
        lanczos = resolvent_norm_at(rotating, 10.0, pair, method="lanczos")

        assert lanczos.converged
        assert lanczos.value == pytest.approx(dense.value, rel=1e-6)

    def test_pseudomode_is_returned(self, rotating):
        """Test that return_vector yields a nonzero minimizing input."""
        estimate = resolvent_norm_at(rotating, 10.0, return_vector=True)

        assert estimate.vector is not None
        assert estimate.vector.shape == (rotating.n,)
        assert np.linalg.norm(estimate.vector) > 0.0

    def test_unknown_pair_rejected(self, grid):
        """Test that an unsupported norm pair raises OperatorError."""
        with pytest.raises(OperatorError):
            NormPair("H2", grid)


class TestScanConfig:
    """Tests for ScanConfig validation and the coarse shift set."""

    @pytest.mark.parametrize(
        "kwargs",
        [{"points": 4}, {"c2": -1.0}, {"workers": 0}, {"log_fraction": 1.5}, {"span_factor": 0.5}],
    )
    def test_invalid_knobs(self, kwargs):
        """Test that out-of-range knobs raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            ScanConfig(**kwargs)

    def test_shift_set_is_symmetric(self, rotating):
        """Test that the coarse shifts mirror around 0 and reach span_factor * |beta|."""
        shifts = coarse_shifts(rotating, ScanConfig(points=32))

        assert 0.0 in shifts
        assert np.all(np.diff(shifts) > 0.0)
        assert shifts == pytest.approx(-shifts[::-1])
        assert shifts[-1] == pytest.approx(400.0)


class TestPseudospectralBound:
    """Tests for pseudospectral_bound."""

    def test_psi_is_minimum_over_shifts(self, rotating):
        """Test that psi is the smallest sigma_min and is attained at psi_shift."""
        scan = pseudospectral_bound(rotating, ScanConfig(points=32))

        assert scan["psi"] == min(scan["sigma_min"])
        assert scan["psi_shift"] in scan["shifts"]
        assert scan["shifts"] == sorted(scan["shifts"])
        assert scan["psi"] <= resolvent_norm_at(rotating, 0.0).value
        assert scan["grid"]["n"] == 128

    def test_non_rotating_psi(self):
        """Test that without rotation the bound is the lowest eigenvalue."""
        grid = build_grid(256, 20.0)
        op = assemble_Lk(grid, 1, FlowParams.from_B(0.0))

        scan = pseudospectral_bound(op, ScanConfig(points=32))

        assert scan["psi"] == pytest.approx(0.5, abs=2e-2)
        assert "unresolved-minimum" not in scan["flags"]

    def test_workers_do_not_change_result(self, rotating):
        """Test that a threaded scan gives the same shifts and values."""
        serial = pseudospectral_bound(rotating, ScanConfig(points=32))
        threaded = pseudospectral_bound(rotating, ScanConfig(points=32, workers=2))

        assert threaded["shifts"] == serial["shifts"]
        assert threaded["sigma_min"] == serial["sigma_min"]

    def test_rotation_raises_bound(self):
        """Test that a stronger rotation yields a larger pseudospectral bound."""
        grid = build_grid(256, 20.0)
        config = ScanConfig(points=32)

        weak = pseudospectral_bound(assemble_Lk(grid, 1, FlowParams.from_B(100.0)), config)
        strong = pseudospectral_bound(assemble_Lk(grid, 1, FlowParams.from_B(1000.0)), config)

        assert strong["psi"] > weak["psi"]

    @pytest.mark.parametrize("k,B", [(-1, 100.0), (1, -100.0), (-1, -100.0)])
    def test_psi_ignores_signs(self, grid, rotating, k, B):
        """Test that Psi depends on k and B only through |kB|."""
        config = ScanConfig(points=32)
        reference = pseudospectral_bound(rotating, config)

        scan = pseudospectral_bound(assemble_Lk(grid, k, FlowParams.from_B(B)), config)

        assert scan["psi"] == pytest.approx(reference["psi"], rel=1e-4)

    def test_psi_grows_like_cube_root(self):
        """Test that the fitted Psi slope over B = 1e2..1e4 is 1/3 within 0.05."""
        grid = build_grid(512, 20.0)

        scans, fit = psi_scaling(grid, 1, [1e2, 1e3, 1e4], ScanConfig(points=64))

        assert len(scans) == 3
        assert fit["slope"] == pytest.approx(1.0 / 3.0, abs=0.05)
        assert fit["x"] == [1e2, 1e3, 1e4]


def unconverged_where(predicate, marked):
    """sigma_min that reports the shifts selected by `predicate` as unconverged."""

    def wrapped(op, *args, **kwargs):
        estimate = sigma_min(op, *args, **kwargs)
        if predicate(op.shift_imag):
            marked.append(op.shift_imag)
            return dataclasses.replace(estimate, converged=False)
        return estimate

    return wrapped


class TestUnconvergedFlag:
    """Tests for the lanczos-unconverged flag of pseudospectral_bound."""

    def test_far_shifts_do_not_flag(self, rotating, monkeypatch):
        """Test that budget misses away from the minimizing shift leave the scan unflagged."""
        # Arrange
        config = ScanConfig(points=32)
        reference = pseudospectral_bound(rotating, config)
        cutoff = 2.0 * abs(reference["psi_shift"]) + 10.0
        marked = []
        monkeypatch.setattr(
            "tc_lab.core.resolvent.sigma_min", unconverged_where(lambda s: abs(s) > cutoff, marked)
        )

        # Act
        scan = pseudospectral_bound(rotating, config)

        # Assert
        assert marked
        assert scan["psi"] == reference["psi"]
        assert "lanczos-unconverged" not in scan["flags"]

    def test_unconverged_minimizer_flags(self, rotating, monkeypatch):
        """Test that an unconverged estimate at the minimizing shift is flagged."""
        marked = []
        monkeypatch.setattr(
            "tc_lab.core.resolvent.sigma_min", unconverged_where(lambda s: True, marked)
        )

        scan = pseudospectral_bound(rotating, ScanConfig(points=32))

        assert "lanczos-unconverged" in scan["flags"]


class TestScalingFit:
    """Tests for scaling_fit."""

    def test_exact_power_law(self):
        """Test that y = 3 x^{1/3} is recovered exactly."""
        x = [1.0, 8.0, 27.0, 64.0]
        y = [3.0 * v ** (1.0 / 3.0) for v in x]

        fit = scaling_fit(x, y)

        assert fit["slope"] == pytest.approx(1.0 / 3.0)
        assert fit["prefactor"] == pytest.approx(3.0)
        assert fit["residual"] == pytest.approx(0.0, abs=1e-12)

    def test_needs_two_points(self):
        """Test that a single point cannot be fitted."""
        with pytest.raises(ConfigurationError):
            scaling_fit([10.0], [1.0])

    def test_rejects_nonpositive_values(self):
        """Test that zero values cannot enter the log fit."""
        with pytest.raises(ConfigurationError):
            scaling_fit([1.0, 2.0], [0.0, 1.0])


class TestSharpnessWitness:
    """Tests for the parabolic sharpness witness."""

    def test_ratio_is_finite(self):
        """Test the witness bump and its ratio on a resolved grid."""
        grid = build_grid(512, 4.0)

        bump, ratio = sharpness_witness(2.0, grid)

        r = grid.nodes
        outside = (r <= 2.0) | (r >= 2.5)
        assert np.all(bump.values[outside] == 0.0)
        assert np.all(bump.values.real[~outside] > 0.0)
        assert np.isfinite(ratio) and ratio > 0.0

    def test_witness_ratio_bounds_psi_from_above(self):
        """Test that the witness ratio at r0 = 2 is at least Psi(L_1) for B = r0^6."""
        # Arrange
        witness_grid = build_grid(512, 4.0)
        op = assemble_Lk(build_grid(256, 20.0), 1, FlowParams.from_B(2.0**6))

        # Act
        _, ratio = sharpness_witness(2.0, witness_grid)
        psi = pseudospectral_bound(op, ScanConfig(points=64))["psi"]

        # Assert
        assert psi > 0.0
        assert ratio >= psi

    def test_small_radius_rejected(self):
        """Test that r0 < 1 raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            sharpness_witness(0.5, build_grid(512, 4.0))

    def test_support_must_fit(self):
        """Test that a support reaching r_max raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            sharpness_witness(3.0, build_grid(512, 3.2))

    def test_coarse_grid_rejected(self):
        """Test that too few nodes in the support raise ResolutionError."""
        with pytest.raises(ResolutionError, match="insufficient grid resolution"):
            sharpness_witness(2.0, build_grid(32, 4.0))


class TestShiftedResolvent:
    """Tests for the shifted H^{-1} constants and the c2 bisection."""

    def test_constants_recorded(self, rotating):
        """Test that every sample at every lambda yields a positive constant."""
        report = shifted_resolvent_audit(
            rotating,
            0.1,
            2,
            lambdas=[0.1, 1.0],
            rng=np.random.default_rng(3),
            with_pseudomodes=False,
        )

        assert report["samples"] == 4
        assert report["skipped"] == 0
        assert report["constant_max"] > 0.0
        assert report["weighted_constant_max"] > 0.0

    def test_shift_must_be_positive(self, rotating):
        """Test that c2 = 0 raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            shifted_resolvent_audit(rotating, 0.0, 1)

    def test_bisection_stays_in_range(self):
        """Test that the bisected c2 lies in [0, c_hi]."""
        op = assemble_Lk(build_grid(64, 12.0), 1, FlowParams.from_B(100.0))

        c2 = bisect_c2(op, c_hi=1.0, iterations=3, scan_points=16)

        assert 0.0 <= c2 <= 1.0
