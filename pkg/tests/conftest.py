"""
Pytest configuration and fixtures
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from initial_data import gaussian, ring
from spectral_core import GridSpec, RealField


def random_mean_zero(grid: GridSpec, seed: int = 0) -> RealField:
    """Seeded white noise with its mean removed"""
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((grid.n, grid.n))
    return RealField(grid, values - values.mean())


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests"""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def small_grid():
    """32 x 32 grid on [-pi, pi)^2"""
    return GridSpec(n=32, box_length=2.0 * np.pi)


@pytest.fixture
def grid64():
    return GridSpec(n=64, box_length=2.0 * np.pi)


@pytest.fixture
def desk_grid():
    """Default laboratory box, n=256 and L=40"""
    return GridSpec(n=256, box_length=40.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def noise(small_grid):
    """Random mean-zero field on the small grid"""
    return random_mean_zero(small_grid, seed=7)


@pytest.fixture
def unit_gaussian(desk_grid):
    """G_1 on the desk grid"""
    return gaussian(desk_grid, mass=1.0, width=1.0)


@pytest.fixture
def ring_field(desk_grid):
    """Zero-mass radial ring whose stream function is G_1"""
    return ring(desk_grid, amplitude=1.0, width=1.0)
