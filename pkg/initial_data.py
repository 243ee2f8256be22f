"""
Built-in initial vorticity families

Every family is assembled from its Fourier coefficients on the grid's lattice and
transformed back once, so the heat flow of a Gaussian is again an exact Gaussian and the
random family is reproducible from its seed alone.
"""

import logging
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from exceptions import DomainError
from spectral_core import (
    GridSpec,
    RealField,
    SpectralField,
    forward_transform,
    inverse_transform,
)

logger = logging.getLogger(__name__)


class InitialDataSpec(BaseModel):
    """Named initial-data family with its parameters"""

    model_config = ConfigDict(frozen=True)

    family: Literal["gaussian", "dipole", "random", "ring", "zero"] = "gaussian"
    mass: float = Field(default=1.0, allow_inf_nan=False)
    width: float = Field(default=1.0, gt=0.0, allow_inf_nan=False, description="Heat time t0")
    center: Tuple[float, float] = (0.0, 0.0)
    amplitude: float = Field(default=1.0, allow_inf_nan=False)
    separation: float = Field(default=2.0, ge=0.0, allow_inf_nan=False)
    seed: int = Field(default=0, ge=0)
    band: Tuple[float, float] = (1.0, 4.0)

    @model_validator(mode="after")
    def validate_band(self) -> "InitialDataSpec":
        lo, hi = self.band
        if not 0.0 < lo < hi:
            raise ValueError(f"band must satisfy 0 < lo < hi, got {self.band}")
        return self

    @property
    def mean_zero(self) -> bool:
        return self.family in ("dipole", "random", "ring", "zero") or self.mass == 0.0


def _shift(grid: GridSpec, center: Tuple[float, float]) -> np.ndarray:
    """exp(-i xi.c), built on the odd lattice so the result stays Hermitian"""
    xi1, xi2 = grid.odd_wavenumbers
    return np.exp(-1j * (xi1 * center[0] + xi2 * center[1]))


def gaussian(
    grid: GridSpec,
    mass: float = 1.0,
    width: float = 1.0,
    center: Tuple[float, float] = (0.0, 0.0),
) -> RealField:
    """mass * G_width(x - center); width is the heat time of the profile"""
    if width <= 0:
        raise DomainError(f"width must be positive, got {width}")
    coefficients = mass * np.exp(-width * grid.xi_squared) * _shift(grid, center)
    return inverse_transform(SpectralField(grid, coefficients))


def dipole(
    grid: GridSpec,
    amplitude: float = 1.0,
    width: float = 1.0,
    separation: float = 2.0,
    center: Tuple[float, float] = (0.0, 0.0),
) -> RealField:
    """Opposite Gaussians split along x1; zero mass"""
    offset = 0.5 * separation
    plus = gaussian(grid, amplitude, width, (center[0] + offset, center[1]))
    minus = gaussian(grid, amplitude, width, (center[0] - offset, center[1]))
    return plus - minus


def ring(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0) -> RealField:
    """
    Radial zero-mass profile with coefficients amplitude * w |xi|^2 exp(-w |xi|^2)

    Its stream function is the Gaussian amplitude * w G_w, so the velocity is azimuthal and
    the transport term vanishes identically.
    """
    if width <= 0:
        raise DomainError(f"width must be positive, got {width}")
    xi_sq = grid.xi_squared
    coefficients = amplitude * width * xi_sq * np.exp(-width * xi_sq)
    return inverse_transform(SpectralField(grid, coefficients))


def random_band_limited(
    grid: GridSpec,
    seed: int = 0,
    band: Tuple[float, float] = (1.0, 4.0),
    amplitude: float = 1.0,
) -> RealField:
    """
    White noise filtered to band[0] <= |xi| <= band[1], scaled to L^2 norm amplitude

    Raises:
        DomainError: if no lattice frequency falls inside the band
    """
    rng = np.random.default_rng(seed)
    noise = RealField(grid, rng.standard_normal((grid.n, grid.n)))
    rho = np.sqrt(grid.xi_squared)
    # a closed band keeps the Nyquist edge symmetric, so drop it explicitly
    k1, k2 = grid.indices
    nyquist = (np.abs(k1) == grid.n // 2) | (np.abs(k2) == grid.n // 2)
    inside = (rho >= band[0]) & (rho <= band[1]) & ~nyquist
    if not np.any(inside):
        raise DomainError(f"band {band} contains no lattice frequency on {grid}")

    coefficients = forward_transform(noise).coefficients * inside
    energy = float(np.sum(np.abs(coefficients) ** 2)) / grid.box_length**2
    if energy == 0.0:
        return RealField.zeros(grid)
    coefficients *= amplitude / np.sqrt(energy)
    return inverse_transform(SpectralField(grid, coefficients))


def build_initial_data(grid: GridSpec, spec: Optional[InitialDataSpec] = None) -> RealField:
    """Evaluate an initial-data spec on a grid"""
    spec = spec or InitialDataSpec()
    logger.info(f"Building initial data: {spec.family} on n={grid.n}, L={grid.box_length}")

    if spec.family == "gaussian":
        return gaussian(grid, spec.mass, spec.width, spec.center)
    if spec.family == "dipole":
        return dipole(grid, spec.amplitude, spec.width, spec.separation, spec.center)
    if spec.family == "ring":
        return ring(grid, spec.amplitude, spec.width)
    if spec.family == "random":
        return random_band_limited(grid, spec.seed, spec.band, spec.amplitude)
    return RealField.zeros(grid)
