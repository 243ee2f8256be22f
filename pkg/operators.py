"""
Physical operators of the viscous beta-plane equation

Heat flow, the Rossby group generated by L1 = d1 (-Delta)^{-1}, the full linear semigroup
T_beta(t) = exp(t(Delta + beta L1)), Biot-Savart velocity, the dealiased transport term and
the linear kernel K_{beta,t}.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.fft as sfft
from pydantic import BaseModel, ConfigDict, Field

import spectral_core
from exceptions import DomainError, GridMismatchError
from spectral_core import (
    Field2D,
    GridSpec,
    RealField,
    SpectralField,
    Symbol,
    apply_symbol,
    dealias_mask,
    inverse_transform,
    to_spectral,
)

logger = logging.getLogger(__name__)

DIVERGENCE_TOLERANCE = 1e-12


class SemigroupParams(BaseModel):
    """Rossby parameter and elapsed time for T_beta(t)"""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(allow_inf_nan=False)
    t: float = Field(ge=0.0, allow_inf_nan=False)


def _require_time(t: float, strict: bool = False) -> None:
    if not math.isfinite(t) or t < 0 or (strict and t == 0):
        bound = "> 0" if strict else ">= 0"
        raise DomainError(f"time must be finite and {bound}, got {t}")


def _inverse_square(grid: GridSpec) -> np.ndarray:
    """1/|xi|^2 with the zero mode set to 0"""
    xi_sq = np.array(grid.xi_squared, copy=True)
    xi_sq[0, 0] = 1.0
    out = 1.0 / xi_sq
    out[0, 0] = 0.0
    return out


def _rossby_ratio(grid: GridSpec) -> np.ndarray:
    """xi1 / |xi|^2 on the odd lattice; the Rossby phase is (t*beta) times this"""
    xi1, _ = grid.odd_wavenumbers
    return xi1 * _inverse_square(grid)


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------


def l1_symbol(grid: GridSpec) -> Symbol:
    """i xi1 / |xi|^2, the skew-symmetric multiplier of L1"""
    return Symbol(grid, 1j * _rossby_ratio(grid), zero_mode=0.0)


def heat_symbol(grid: GridSpec, t: float) -> Symbol:
    _require_time(t)
    return Symbol(grid, np.exp(-t * grid.xi_squared), zero_mode=1.0)


def rossby_symbol(grid: GridSpec, beta: float, t: float) -> Symbol:
    """exp(i t beta xi1/|xi|^2); unimodular, defined for any real t"""
    if not (math.isfinite(beta) and math.isfinite(t)):
        raise DomainError(f"beta and t must be finite, got beta={beta}, t={t}")
    return Symbol(grid, np.exp(1j * (t * beta) * _rossby_ratio(grid)), zero_mode=1.0)


def semigroup_symbol(grid: GridSpec, beta: float, t: float) -> Symbol:
    """exp(-t|xi|^2 + i t beta xi1/|xi|^2) evaluated as a single exponential"""
    params = SemigroupParams(beta=beta, t=t)
    exponent = -params.t * grid.xi_squared + 1j * (params.t * params.beta) * _rossby_ratio(grid)
    return Symbol(grid, np.exp(exponent), zero_mode=1.0)


def linear_symbol(grid: GridSpec, beta: float) -> np.ndarray:
    """Generator -|xi|^2 + i beta xi1/|xi|^2 of the linear semigroup (zero at xi = 0)"""
    return -grid.xi_squared + 1j * beta * _rossby_ratio(grid)


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------


def _propagate(omega: Field2D, symbol: Symbol) -> Field2D:
    result = apply_symbol(to_spectral(omega), symbol)
    return result if isinstance(omega, SpectralField) else inverse_transform(result)


def heat_propagate(omega: Field2D, t: float) -> Field2D:
    """e^{t Delta} omega"""
    return _propagate(omega, heat_symbol(omega.grid, t))


def rossby_propagate(omega: Field2D, beta: float, t: float) -> Field2D:
    """e^{t beta L1} omega; t may be negative"""
    return _propagate(omega, rossby_symbol(omega.grid, beta, t))


def semigroup_propagate(omega: Field2D, params: SemigroupParams) -> Field2D:
    """T_beta(t) omega"""
    return _propagate(omega, semigroup_symbol(omega.grid, params.beta, params.t))


# ---------------------------------------------------------------------------
# Velocity and transport
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VelocityPair:
    """Divergence-free velocity (u1, u2) on a shared grid"""

    u1: RealField
    u2: RealField

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise GridMismatchError("velocity components live on different grids")
        defect = divergence_defect(self)
        if defect > DIVERGENCE_TOLERANCE:
            raise DomainError(f"velocity field is not divergence-free (relative {defect:.3e})")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid


def divergence_defect(u: VelocityPair) -> float:
    """max |i xi . u^| relative to max |xi| |u^|"""
    grid = u.u1.grid
    xi1, xi2 = grid.odd_wavenumbers
    U1 = spectral_core.forward_transform(u.u1).coefficients
    U2 = spectral_core.forward_transform(u.u2).coefficients
    divergence = np.abs(1j * xi1 * U1 + 1j * xi2 * U2)
    scale = float(np.max(np.sqrt(grid.xi_squared) * (np.abs(U1) + np.abs(U2))))
    if scale == 0.0:
        return 0.0
    return float(np.max(divergence)) / scale


def velocity_coefficients(
    grid: GridSpec, coefficients: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """u1^ = -i xi2/|xi|^2 w^,  u2^ = i xi1/|xi|^2 w^"""
    xi1, xi2 = grid.odd_wavenumbers
    inv = _inverse_square(grid)
    return -1j * xi2 * inv * coefficients, 1j * xi1 * inv * coefficients


def biot_savart(omega: Field2D) -> VelocityPair:
    """u = grad^perp (-Delta)^{-1} omega, zero mode 0"""
    W = to_spectral(omega)
    U1, U2 = velocity_coefficients(W.grid, W.coefficients)
    return VelocityPair(
        inverse_transform(SpectralField(W.grid, U1)),
        inverse_transform(SpectralField(W.grid, U2)),
    )


def to_physical_raw(grid: GridSpec, coefficients: np.ndarray) -> np.ndarray:
    """Inverse transform without the symmetry audit, for inner loops"""
    workers = spectral_core.get_fft_workers()
    return sfft.ifft2(coefficients * grid.phase, workers=workers).real / grid.cell_area


def to_coefficients_raw(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    workers = spectral_core.get_fft_workers()
    return sfft.fft2(values, workers=workers) * (grid.cell_area * grid.phase)


def transport_coefficients(
    grid: GridSpec, coefficients: np.ndarray, mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Spectral div(u w) for coefficients of w

    With a mask, w is truncated before the product and the divergence after it.
    """
    if mask is not None:
        coefficients = coefficients * mask
    U1, U2 = velocity_coefficients(grid, coefficients)
    w = to_physical_raw(grid, coefficients)
    flux1 = to_coefficients_raw(grid, to_physical_raw(grid, U1) * w)
    flux2 = to_coefficients_raw(grid, to_physical_raw(grid, U2) * w)
    xi1, xi2 = grid.odd_wavenumbers
    result = 1j * xi1 * flux1 + 1j * xi2 * flux2
    result[0, 0] = 0.0
    if mask is not None:
        result *= mask
    return result


def nonlinear_term(omega: Field2D, dealias: bool = True) -> Field2D:
    """
    div(u omega) evaluated pseudo-spectrally with 2/3-rule truncation

    Returns the same kind of field as omega; the zero mode is exactly 0.
    """
    W = to_spectral(omega)
    mask = dealias_mask(W.grid) if dealias else None
    result = SpectralField(W.grid, transport_coefficients(W.grid, W.coefficients, mask))
    return result if isinstance(omega, SpectralField) else inverse_transform(result)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def gauss_kernel(grid: GridSpec, t: float) -> RealField:
    """G_t(x) = (4 pi t)^{-1} exp(-|x|^2 / 4t) sampled on the grid"""
    _require_time(t, strict=True)
    if 4.0 * math.sqrt(t) > grid.box_length / 4.0:
        logger.warning(
            f"Gauss kernel at t={t} does not fit the box (4 sqrt(t) > L/4 = {grid.box_length / 4})"
        )
    x1, x2 = grid.coordinates
    values = np.exp(-(x1**2 + x2**2) / (4.0 * t)) / (4.0 * math.pi * t)
    return RealField(grid, values)


def kernel_K(grid: GridSpec, beta: float, t: float) -> RealField:
    """K_{beta,t} = e^{t beta L1} G_t, built from its multiplier on the lattice"""
    _require_time(t, strict=True)
    symbol = semigroup_symbol(grid, beta, t)
    return inverse_transform(SpectralField(grid, symbol.values))


def kernel_self_similar(grid: GridSpec, beta: float, t: float) -> Symbol:
    """
    Multiplier of t^{-1} (e^{t^{3/2} beta L1} G_1)(t^{-1/2} x)

    The rescaled profile is evaluated at eta = t^{1/2} xi, which reproduces the multiplier
    of K_{beta,t} at xi.
    """
    _require_time(t, strict=True)
    root = math.sqrt(t)
    xi1, xi2 = grid.wavenumbers
    xi1_odd, _ = grid.odd_wavenumbers
    eta1, eta2, eta1_odd = root * xi1, root * xi2, root * xi1_odd
    eta_sq = eta1**2 + eta2**2
    eta_sq[0, 0] = 1.0
    profile = np.exp(-eta_sq + 1j * (t**1.5 * beta) * eta1_odd / eta_sq)
    return Symbol(grid, profile, zero_mode=1.0)
