"""
Tests for the built-in initial vorticity families
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from exceptions import DomainError
from initial_data import (
    InitialDataSpec,
    build_initial_data,
    dipole,
    gaussian,
    random_band_limited,
    ring,
)
from spectral_core import forward_transform, lebesgue_norm


class TestInitialDataSpec:
    """Tests for family validation"""

    def test_defaults(self):
        """Test the default family is a unit Gaussian"""
        spec = InitialDataSpec()
        assert spec.family == "gaussian"
        assert spec.mass == 1.0
        assert not spec.mean_zero

    @pytest.mark.parametrize(
        "values",
        [{"band": (2.0, 1.0)}, {"band": (0.0, 1.0)}, {"width": 0.0}, {"family": "vortex"},
         {"seed": -1}, {"mass": float("inf")}],
    )
    def test_rejects_bad_values(self, values):
        """Test invalid parameters fail validation"""
        with pytest.raises(ValidationError):
            InitialDataSpec(**values)

    @pytest.mark.parametrize("family", ["dipole", "random", "ring", "zero"])
    def test_mean_zero_families(self, family):
        """Test which families carry no mass"""
        assert InitialDataSpec(family=family).mean_zero

    def test_massless_gaussian(self):
        """Test a zero-mass Gaussian counts as mean-zero"""
        assert InitialDataSpec(mass=0.0).mean_zero


class TestGaussian:
    """Tests for the heat-kernel profile"""

    def test_mass_and_peak(self, desk_grid):
        """Test mass * G_w has the requested mass and peak mass/(4 pi w)"""
        f = gaussian(desk_grid, mass=2.0, width=0.5)
        assert f.mass == pytest.approx(2.0, abs=1e-10)
        assert f.values.max() == pytest.approx(2.0 / (4 * math.pi * 0.5), rel=1e-10)

    def test_center(self, desk_grid):
        """Test the peak sits on the requested grid point"""
        f = gaussian(desk_grid, center=(2.5, -5.0))
        j1, j2 = np.unravel_index(np.argmax(f.values), f.values.shape)
        assert (j1, j2) == (desk_grid.n // 2 + 16, desk_grid.n // 2 - 32)

    def test_rejects_nonpositive_width(self, desk_grid):
        """Test width must be positive"""
        with pytest.raises(DomainError):
            gaussian(desk_grid, width=-1.0)


class TestDipoleAndRing:
    """Tests for the zero-mass families"""

    def test_dipole_mass(self, desk_grid):
        """Test the dipole carries no mass"""
        assert dipole(desk_grid).mass == pytest.approx(0.0, abs=1e-12)

    def test_dipole_antisymmetric(self, desk_grid):
        """Test omega(-x1, x2) = -omega(x1, x2)"""
        values = dipole(desk_grid, separation=3.0).values
        np.testing.assert_allclose(values[1:, :], -values[:0:-1, :], atol=1e-13)

    def test_ring_center_value(self, desk_grid):
        """Test -Delta(w G_w) at the origin equals amplitude/(4 pi w)"""
        f = ring(desk_grid, amplitude=3.0, width=2.0)
        centre = f.values[desk_grid.n // 2, desk_grid.n // 2]
        assert centre == pytest.approx(3.0 / (8 * math.pi), rel=1e-10)
        assert f.mass == pytest.approx(0.0, abs=1e-12)

    def test_ring_is_radial(self, ring_field):
        """Test the ring is symmetric under swapping x1 and x2"""
        np.testing.assert_allclose(ring_field.values, ring_field.values.T, atol=1e-14)


class TestRandomBandLimited:
    """Tests for the seeded band-limited family"""

    def test_normalized(self, grid64):
        """Test the L^2 norm equals the amplitude"""
        f = random_band_limited(grid64, seed=2, band=(2.0, 6.0), amplitude=0.3)
        assert lebesgue_norm(f, 2.0) == pytest.approx(0.3, rel=1e-12)
        assert f.mass == pytest.approx(0.0, abs=1e-12)

    def test_reproducible(self, grid64):
        """Test the seed alone fixes the field"""
        first = random_band_limited(grid64, seed=8)
        second = random_band_limited(grid64, seed=8)
        other = random_band_limited(grid64, seed=9)
        np.testing.assert_array_equal(first.values, second.values)
        assert not np.array_equal(first.values, other.values)

    def test_spectral_support(self, grid64):
        """Test no energy leaks outside the band"""
        f = random_band_limited(grid64, seed=4, band=(2.0, 5.0))
        coefficients = forward_transform(f).coefficients
        rho = np.sqrt(grid64.xi_squared)
        outside = (rho < 2.0) | (rho > 5.0)
        assert np.abs(coefficients[outside]).max() < 1e-12 * np.abs(coefficients).max()

    def test_empty_band(self, grid64):
        """Test a band between lattice frequencies is refused"""
        with pytest.raises(DomainError):
            random_band_limited(grid64, band=(0.1, 0.5))


class TestBuildInitialData:
    """Tests for the family dispatcher"""

    def test_default_is_gaussian(self, small_grid):
        """Test no spec builds a unit Gaussian"""
        np.testing.assert_array_equal(
            build_initial_data(small_grid).values, gaussian(small_grid).values
        )

    @pytest.mark.parametrize(
        "spec, builder",
        [
            (InitialDataSpec(family="dipole", separation=1.0), lambda g: dipole(g, separation=1.0)),
            (InitialDataSpec(family="ring", width=0.5), lambda g: ring(g, width=0.5)),
            (InitialDataSpec(family="random", seed=3), lambda g: random_band_limited(g, seed=3)),
        ],
    )
    def test_dispatch(self, small_grid, spec, builder):
        """Test each family routes to its builder"""
        np.testing.assert_array_equal(
            build_initial_data(small_grid, spec).values, builder(small_grid).values
        )

    def test_zero_family(self, small_grid):
        """Test the zero family is identically zero"""
        assert not build_initial_data(small_grid, InitialDataSpec(family="zero")).values.any()
