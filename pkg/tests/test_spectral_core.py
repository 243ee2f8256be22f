"""
Tests for grids, transforms, symbols, norms and the Littlewood-Paley bank
"""

import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from exceptions import DomainError, GridMismatchError, HermitianSymmetryError, NonFiniteFieldError
from initial_data import gaussian, random_band_limited
from operators import gauss_kernel
from spectral_core import (
    GridSpec,
    LPBank,
    RealField,
    SpectralField,
    Symbol,
    besov_norm,
    dealias_mask,
    forward_transform,
    gradient_energy,
    hermitian_defect,
    inverse_transform,
    lebesgue_norm,
    lp_project,
    riesz_symbol,
    sobolev_norm,
    spectral_inner,
    zero_pad,
)
from tests.conftest import random_mean_zero


class TestGridSpec:
    """Tests for grid validation and lattice geometry"""

    def test_valid_grid(self):
        """Test derived spacings of a valid grid"""
        grid = GridSpec(n=64, box_length=8.0)
        assert grid.spacing == 0.125
        assert grid.cell_area == 0.125**2
        assert grid.frequency_step == pytest.approx(2 * math.pi / 8.0)

    @pytest.mark.parametrize("n", [4, 48, 100])
    def test_rejects_bad_resolution(self, n):
        """Test n must be a power of two and at least 8"""
        with pytest.raises(ValidationError):
            GridSpec(n=n, box_length=1.0)

    @pytest.mark.parametrize("length", [0.0, -1.0, float("inf")])
    def test_rejects_bad_box(self, length):
        """Test box length must be positive and finite"""
        with pytest.raises(ValidationError):
            GridSpec(n=16, box_length=length)

    def test_coordinates_centered(self, small_grid):
        """Test x = h (j - n/2) with the origin on the grid"""
        x1, x2 = small_grid.coordinates
        assert x1[small_grid.n // 2, 0] == 0.0
        assert x2[0, small_grid.n // 2] == 0.0
        assert x1[0, 0] == pytest.approx(-small_grid.box_length / 2)

    def test_lattice_is_read_only(self, small_grid):
        """Test cached lattice arrays cannot be modified"""
        with pytest.raises(ValueError):
            small_grid.xi_squared[0, 0] = 1.0

    def test_rescaled(self):
        """Test rescaling shrinks the box and keeps the resolution"""
        grid = GridSpec(n=32, box_length=40.0).rescaled(2.0)
        assert grid.n == 32
        assert grid.box_length == 20.0

    def test_grid_equality(self):
        """Test grids compare by value"""
        assert GridSpec(n=16, box_length=2.0) == GridSpec(n=16, box_length=2.0)
        assert GridSpec(n=16, box_length=2.0) != GridSpec(n=16, box_length=3.0)


class TestFields:
    """Tests for field construction and arithmetic"""

    def test_values_copied_and_frozen(self, small_grid):
        """Test RealField owns a read-only copy of its samples"""
        raw = np.ones((small_grid.n, small_grid.n))
        field = RealField(small_grid, raw)
        raw[0, 0] = 5.0
        assert field.values[0, 0] == 1.0
        with pytest.raises(ValueError):
            field.values[0, 0] = 2.0

    def test_shape_mismatch(self, small_grid):
        """Test wrong array shape is rejected"""
        with pytest.raises(GridMismatchError):
            RealField(small_grid, np.zeros((8, 8)))

    def test_non_finite_samples(self, small_grid):
        """Test NaN samples are rejected"""
        values = np.zeros((small_grid.n, small_grid.n))
        values[3, 4] = np.nan
        with pytest.raises(NonFiniteFieldError):
            RealField(small_grid, values)

    def test_arithmetic_on_mismatched_grids(self, small_grid):
        """Test adding fields from different grids fails"""
        other = GridSpec(n=small_grid.n, box_length=1.0)
        with pytest.raises(GridMismatchError):
            RealField.zeros(small_grid) + RealField.zeros(other)

    def test_linear_combination(self, noise):
        """Test field arithmetic acts on samples"""
        combined = 2.0 * noise - noise
        np.testing.assert_allclose(combined.values, noise.values, atol=1e-15)

    def test_mass(self, small_grid):
        """Test mass is the midpoint quadrature of the samples"""
        field = RealField(small_grid, np.ones((small_grid.n, small_grid.n)))
        assert field.mass == pytest.approx(small_grid.box_length**2)

    def test_symbol_zero_mode_override(self, small_grid):
        """Test the stored zero mode replaces values[0, 0]"""
        values = np.full((small_grid.n, small_grid.n), 2.0)
        symbol = Symbol(small_grid, values, zero_mode=0.5)
        assert symbol.values[0, 0] == 0.5
        assert symbol.values[1, 1] == 2.0


class TestTransforms:
    """Tests for the continuum-normalized FFT pair"""

    def test_round_trip(self, noise):
        """Test inverse(forward(f)) recovers the samples"""
        restored = inverse_transform(forward_transform(noise))
        np.testing.assert_allclose(restored.values, noise.values, atol=1e-12)

    @pytest.mark.parametrize("n", [64, 128])
    def test_round_trip_many_fields(self, n):
        """Test 100 seeded fields survive forward then inverse to 1e-12 relative"""
        grid = GridSpec(n=n, box_length=2.0 * math.pi)
        for seed in range(100):
            f = random_mean_zero(grid, seed=seed)
            restored = inverse_transform(forward_transform(f))
            error = np.max(np.abs(restored.values - f.values))
            assert error <= 1e-12 * np.max(np.abs(f.values))

    def test_matches_direct_sum(self):
        """Test an 8 x 8 transform against h^2 sum_j f(x_j) exp(-i xi . x_j)"""
        grid = GridSpec(n=8, box_length=3.0)
        f = random_mean_zero(grid, seed=4)
        x1, x2 = grid.coordinates
        xi1, xi2 = grid.wavenumbers
        phase = xi1[:, :, None, None] * x1[None, None] + xi2[:, :, None, None] * x2[None, None]
        direct = grid.cell_area * np.sum(f.values[None, None] * np.exp(-1j * phase), axis=(2, 3))
        np.testing.assert_allclose(forward_transform(f).coefficients, direct, atol=1e-13)

    def test_zero_mode_is_integral(self, noise):
        """Test F(0) equals the quadrature mass"""
        F = forward_transform(noise)
        assert F.zero_mode.real == pytest.approx(noise.mass, abs=1e-12)

    def test_gaussian_transform(self, desk_grid):
        """Test the sampled heat kernel transforms to exp(-|xi|^2)"""
        F = forward_transform(gauss_kernel(desk_grid, 1.0))
        expected = np.exp(-desk_grid.xi_squared)
        np.testing.assert_allclose(F.coefficients, expected, atol=1e-10)

    def test_real_field_is_hermitian(self, noise):
        """Test transforms of real samples pass the symmetry audit"""
        assert hermitian_defect(forward_transform(noise)) < 1e-14

    def test_rejects_non_hermitian(self, small_grid):
        """Test coefficients of a complex field are refused"""
        coefficients = np.zeros((small_grid.n, small_grid.n), dtype=complex)
        coefficients[1, 0] = 1j
        with pytest.raises(HermitianSymmetryError):
            inverse_transform(SpectralField(small_grid, coefficients))

    def test_rejects_non_finite_coefficients(self, small_grid):
        """Test NaN coefficients are refused"""
        coefficients = np.zeros((small_grid.n, small_grid.n), dtype=complex)
        coefficients[0, 0] = np.inf
        with pytest.raises(NonFiniteFieldError):
            inverse_transform(SpectralField(small_grid, coefficients))

    def test_parseval(self, noise):
        """Test the spectral inner product matches the physical L^2 norm"""
        assert spectral_inner(noise, noise) == pytest.approx(
            lebesgue_norm(noise, 2.0) ** 2, rel=1e-12
        )

    def test_zero_pad_interpolates(self, noise):
        """Test the refined grid reproduces the original samples on every second point"""
        padded = inverse_transform(zero_pad(forward_transform(noise), 2))
        assert padded.grid.n == 2 * noise.grid.n
        assert padded.grid.box_length == noise.grid.box_length
        np.testing.assert_allclose(padded.values[::2, ::2], noise.values, atol=1e-12)

    def test_zero_pad_rejects_odd_factor(self, noise):
        """Test padding factors must be powers of two"""
        with pytest.raises(DomainError):
            zero_pad(forward_transform(noise), 3)


class TestSymbols:
    """Tests for multipliers and the dealiasing mask"""

    def test_riesz_zero_mode(self, small_grid):
        """Test |xi|^s is pinned to zero at the origin for any s"""
        for s in (-1.0, 0.0, 2.0):
            assert riesz_symbol(small_grid, s).zero_mode == 0

    def test_riesz_values(self, small_grid):
        """Test |xi|^2 reproduces the lattice"""
        symbol = riesz_symbol(small_grid, 2.0)
        np.testing.assert_allclose(symbol.values.real[1:, 1:], small_grid.xi_squared[1:, 1:])

    def test_symbol_product_grid_mismatch(self, small_grid):
        """Test symbols on different grids cannot be multiplied"""
        other = GridSpec(n=small_grid.n, box_length=1.0)
        with pytest.raises(GridMismatchError):
            Symbol.constant(small_grid) * Symbol.constant(other)

    def test_dealias_mask_count(self, small_grid):
        """Test the 2/3 rule keeps |k| <= 10 per axis on a 32-point grid"""
        mask = dealias_mask(small_grid)
        assert mask.sum() == 21**2
        assert mask[0, 0]
        assert not mask[small_grid.n // 2, 0]


class TestNorms:
    """Tests for Lebesgue, Sobolev and Besov norms"""

    def test_gaussian_calibration(self, unit_gaussian):
        """Test closed-form norms of G_1"""
        assert lebesgue_norm(unit_gaussian, 1.0) == pytest.approx(1.0, rel=1e-5)
        assert lebesgue_norm(unit_gaussian, 2.0) == pytest.approx((8 * math.pi) ** -0.5, rel=1e-5)
        assert lebesgue_norm(unit_gaussian, math.inf) == pytest.approx(
            1.0 / (4 * math.pi), rel=1e-5
        )
        assert sobolev_norm(unit_gaussian, 1.0, 2.0) == pytest.approx(
            (16 * math.pi) ** -0.5, rel=1e-5
        )

    def test_gradient_energy_matches_sobolev(self, unit_gaussian):
        """Test Parseval gradient energy equals the squared H^1 seminorm"""
        assert gradient_energy(unit_gaussian) == pytest.approx(
            sobolev_norm(unit_gaussian, 1.0, 2.0) ** 2, rel=1e-10
        )

    def test_zero_field(self, small_grid):
        """Test every norm of zero vanishes"""
        zero = RealField.zeros(small_grid)
        assert lebesgue_norm(zero, 3.0) == 0.0
        assert sobolev_norm(zero, 1.0, math.inf) == 0.0

    def test_large_exponent_does_not_overflow(self, small_grid):
        """Test peak scaling keeps high L^p norms finite"""
        field = RealField(small_grid, np.full((small_grid.n, small_grid.n), 1e3))
        value = lebesgue_norm(field, 200.0)
        assert math.isfinite(value)
        assert value == pytest.approx(1e3 * small_grid.box_length ** (2 / 200.0), rel=1e-10)

    def test_oversampled_sup_dominates(self, noise):
        """Test the refined sup norm cannot fall below the coarse one"""
        coarse = lebesgue_norm(noise, math.inf)
        fine = lebesgue_norm(noise, math.inf, oversample=True)
        assert fine >= coarse - 1e-12

    def test_invalid_exponents(self, noise):
        """Test exponent ranges are enforced"""
        with pytest.raises(DomainError):
            lebesgue_norm(noise, 0.5)
        with pytest.raises(DomainError):
            sobolev_norm(noise, 0.0, 1.5)

    def test_sobolev_zero_order_is_mean_free(self, small_grid):
        """Test s = 0 drops the zero mode"""
        constant = RealField(small_grid, np.full((small_grid.n, small_grid.n), 3.0))
        assert sobolev_norm(constant, 0.0, 2.0) == pytest.approx(0.0, abs=1e-12)


class TestLittlewoodPaley:
    """Tests for the dyadic partition of unity"""

    def test_partition_of_unity(self, small_grid):
        """Test the default bank sums to one on every nonzero lattice frequency"""
        bank = LPBank.build(small_grid)
        total = bank.partition_sum()
        nonzero = small_grid.xi_squared > 0
        np.testing.assert_allclose(total[nonzero], 1.0, atol=1e-12)
        assert total[0, 0] == 0.0

    def test_square_sum_bounds(self, small_grid):
        """Test sum_k phi_k^2 stays in [1/2, 1] since at most two blocks overlap"""
        bank = LPBank.build(small_grid)
        squares = np.sum([bank.symbols[k] ** 2 for k in bank.indices], axis=0)
        nonzero = small_grid.xi_squared > 0
        assert np.all(squares[nonzero] >= 0.5 - 1e-12)
        assert np.all(squares[nonzero] <= 1.0 + 1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_besov_equivalent_to_l2(self, seed):
        """Test B^0_{2,2} lies within [0.8, 1] times the mean-free L^2 norm of band-limited data"""
        grid = GridSpec(n=64, box_length=2.0 * math.pi)
        f = random_band_limited(grid, seed=seed, band=(1.0, 10.0))
        ratio = besov_norm(f, 0.0, 2.0, 2.0, LPBank.build(grid)) / sobolev_norm(f, 0.0, 2.0)
        assert 0.8 <= ratio <= 1.0 + 1e-12

    def test_projections_reassemble_field(self, noise):
        """Test the sum of P_k f recovers a mean-zero field"""
        bank = LPBank.build(noise.grid)
        pieces = [lp_project(noise, k, bank).values for k in bank.indices]
        np.testing.assert_allclose(np.sum(pieces, axis=0), noise.values, atol=1e-10)

    def test_full_coverage(self, noise):
        """Test the default bank resolves all spectral energy"""
        assert LPBank.build(noise.grid).uncovered_fraction(noise) < 1e-12

    def test_out_of_range_block(self, small_grid):
        """Test asking for a block outside the bank fails"""
        bank = LPBank.build(small_grid)
        with pytest.raises(DomainError):
            bank.symbol(bank.k_max + 1)

    def test_empty_range(self, small_grid):
        """Test an inverted range is rejected"""
        with pytest.raises(DomainError):
            LPBank.build(small_grid, (3, 1))

    def test_besov_homogeneity(self, noise):
        """Test Besov norms scale linearly"""
        bank = LPBank.build(noise.grid)
        one = besov_norm(noise, 0.5, 2.0, 2.0, bank)
        two = besov_norm(2.0 * noise, 0.5, 2.0, 2.0, bank)
        assert two == pytest.approx(2.0 * one, rel=1e-12)

    def test_besov_sup_aggregation(self, noise):
        """Test r = inf takes the largest dyadic term"""
        bank = LPBank.build(noise.grid)
        assert besov_norm(noise, 0.0, 2.0, math.inf, bank) <= besov_norm(
            noise, 0.0, 2.0, 1.0, bank
        )

    def test_coverage_warning(self, noise, caplog):
        """Test a truncated bank logs how much energy it misses"""
        bank = LPBank.build(noise.grid, (0, 1))
        with caplog.at_level(logging.WARNING):
            besov_norm(noise, 0.0, 2.0, 2.0, bank)
        assert "misses" in caplog.text

    def test_mismatched_bank(self, noise):
        """Test projecting with a bank from another grid fails"""
        bank = LPBank.build(GridSpec(n=noise.grid.n, box_length=1.0))
        with pytest.raises(GridMismatchError):
            lp_project(noise, 0, bank)


class TestRandomFields:
    """Sanity checks on the shared random fixture"""

    def test_seeded_reproducibility(self, small_grid):
        """Test the same seed yields the same field"""
        a = random_mean_zero(small_grid, seed=3)
        b = random_mean_zero(small_grid, seed=3)
        np.testing.assert_array_equal(a.values, b.values)

    def test_mean_zero(self, small_grid):
        """Test the fixture removes the mean"""
        assert abs(random_mean_zero(small_grid).mass) < 1e-10

    def test_gaussian_family_is_heat_kernel(self, desk_grid):
        """Test the spectral Gaussian agrees with the sampled heat kernel"""
        np.testing.assert_allclose(
            gaussian(desk_grid, 1.0, 1.0).values, gauss_kernel(desk_grid, 1.0).values, atol=1e-12
        )
