"""
Discrete Fourier infrastructure on a periodic box approximating R^2

Physical samples live on x = (L/n)(j - n/2), axis 0 <-> x1, axis 1 <-> x2. Spectral
coefficients are full (n, n) arrays in FFT order, scaled so that they approximate the
continuum transform  Ff(xi) = int f(x) exp(-i x.xi) dx.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.fft as sfft
from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import (
    DEALIAS_FRACTION,
    FFT_WORKERS,
    HERMITIAN_TOLERANCE,
    LP_COVERAGE_THRESHOLD,
    LP_INNER_EDGE,
    LP_OUTER_EDGE,
    MIN_GRID_N,
)
from exceptions import (
    DomainError,
    GridMismatchError,
    HermitianSymmetryError,
    NonFiniteFieldError,
)

logger = logging.getLogger(__name__)

_fft_workers = FFT_WORKERS


def set_fft_workers(workers: int) -> None:
    """Set the thread count used by every transform in the process"""
    global _fft_workers
    if workers < 1:
        raise DomainError(f"FFT worker count must be positive, got {workers}")
    _fft_workers = int(workers)
    logger.debug(f"FFT workers set to {_fft_workers}")


def get_fft_workers() -> int:
    return _fft_workers


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _lattice(n: int, box_length: float) -> Dict[str, np.ndarray]:
    h = box_length / n
    offsets = (np.arange(n) - n // 2) * h
    x1, x2 = np.meshgrid(offsets, offsets, indexing="ij")

    k = sfft.fftfreq(n, d=1.0 / n)  # integers in FFT order, -n/2 at index n/2
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    dk = 2.0 * np.pi / box_length
    xi1, xi2 = dk * k1, dk * k2

    # Nyquist row/column carries no odd component on a real lattice
    k_odd = k.copy()
    k_odd[n // 2] = 0.0
    o1, o2 = np.meshgrid(dk * k_odd, dk * k_odd, indexing="ij")

    parity = (k1.astype(np.int64) + k2.astype(np.int64)) % 2
    phase = np.where(parity == 0, 1.0, -1.0)

    arrays = {
        "x1": x1,
        "x2": x2,
        "k1": k1,
        "k2": k2,
        "xi1": xi1,
        "xi2": xi2,
        "xi1_odd": o1,
        "xi2_odd": o2,
        "xi_squared": xi1**2 + xi2**2,
        "phase": phase,
    }
    for value in arrays.values():
        value.flags.writeable = False
    return arrays


class GridSpec(BaseModel):
    """Periodic n x n box of side box_length"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=MIN_GRID_N, description="Grid points per side (power of two)")
    box_length: float = Field(gt=0.0, allow_inf_nan=False, description="Side length L")

    @field_validator("n")
    @classmethod
    def validate_power_of_two(cls, v: int) -> int:
        if v & (v - 1) != 0:
            raise ValueError(f"n must be a power of two, got {v}")
        return v

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def frequency_step(self) -> float:
        return 2.0 * math.pi / self.box_length

    @property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        arrays = _lattice(self.n, self.box_length)
        return arrays["x1"], arrays["x2"]

    @property
    def indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Integer lattice indices k1, k2 (as floats) in FFT order"""
        arrays = _lattice(self.n, self.box_length)
        return arrays["k1"], arrays["k2"]

    @property
    def wavenumbers(self) -> Tuple[np.ndarray, np.ndarray]:
        arrays = _lattice(self.n, self.box_length)
        return arrays["xi1"], arrays["xi2"]

    @property
    def odd_wavenumbers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Wavenumbers with the Nyquist index zeroed, for odd multipliers"""
        arrays = _lattice(self.n, self.box_length)
        return arrays["xi1_odd"], arrays["xi2_odd"]

    @property
    def xi_squared(self) -> np.ndarray:
        return _lattice(self.n, self.box_length)["xi_squared"]

    @property
    def phase(self) -> np.ndarray:
        """(-1)^(k1+k2): shifts the FFT origin from the corner to the box centre"""
        return _lattice(self.n, self.box_length)["phase"]

    def rescaled(self, factor: float) -> "GridSpec":
        """Same resolution on a box shrunk by factor (x -> factor * x maps old onto new)"""
        return GridSpec(n=self.n, box_length=self.box_length / factor)


def dealias_mask(grid: GridSpec) -> np.ndarray:
    """2/3-rule mask: True where max(|k1|, |k2|) <= n/3"""
    k1, k2 = grid.indices
    cutoff = grid.n * DEALIAS_FRACTION
    return np.maximum(np.abs(k1), np.abs(k2)) <= cutoff


# ---------------------------------------------------------------------------
# Fields and symbols
# ---------------------------------------------------------------------------


def _frozen_copy(values: np.ndarray, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class RealField:
    """Physical-space samples of a real field"""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = _frozen_copy(self.values, np.float64)
        if values.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError(
                f"values shape {values.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("RealField contains non-finite samples")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "RealField":
        return cls(grid, np.zeros((grid.n, grid.n)))

    @property
    def mass(self) -> float:
        """Quadrature of the field over the box"""
        return float(np.sum(self.values) * self.grid.cell_area)

    def _check(self, other: "RealField") -> None:
        if not isinstance(other, RealField) or other.grid != self.grid:
            raise GridMismatchError("operands live on different grids")

    def __add__(self, other: "RealField") -> "RealField":
        self._check(other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        self._check(other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    """Continuum-normalized Fourier coefficients on the grid's lattice"""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = _frozen_copy(self.coefficients, np.complex128)
        if coefficients.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError(
                f"coefficient shape {coefficients.shape} does not match grid n={self.grid.n}"
            )
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @property
    def zero_mode(self) -> complex:
        """Coefficient at xi = 0, i.e. the integral of the field"""
        return complex(self.coefficients[0, 0])

    def _check(self, other: "SpectralField") -> None:
        if not isinstance(other, SpectralField) or other.grid != self.grid:
            raise GridMismatchError("operands live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * scalar)

    __rmul__ = __mul__


Field2D = Union[RealField, SpectralField]


@dataclass(frozen=True)
class Symbol:
    """
    Fourier multiplier on the lattice with an explicitly stored zero-mode value

    The value passed as zero_mode overrides whatever values[0, 0] holds, so singular
    homogeneous symbols can be built from arrays that are undefined at xi = 0.
    """

    grid: GridSpec
    values: np.ndarray
    zero_mode: complex = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128, copy=True)
        if values.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError(
                f"symbol shape {values.shape} does not match grid n={self.grid.n}"
            )
        values[0, 0] = self.zero_mode
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("symbol values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "zero_mode", complex(self.zero_mode))

    @classmethod
    def constant(cls, grid: GridSpec, value: complex = 1.0) -> "Symbol":
        return cls(grid, np.full((grid.n, grid.n), value, dtype=np.complex128), value)

    def __mul__(self, other: "Symbol") -> "Symbol":
        if not isinstance(other, Symbol) or other.grid != self.grid:
            raise GridMismatchError("symbols live on different grids")
        return Symbol(self.grid, self.values * other.values, self.zero_mode * other.zero_mode)


def _require_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError(f"{what} contains non-finite values")


def to_spectral(f: Field2D) -> SpectralField:
    return f if isinstance(f, SpectralField) else forward_transform(f)


def to_real(f: Field2D) -> RealField:
    return f if isinstance(f, RealField) else inverse_transform(f)


def _same_kind(template: Field2D, result: SpectralField) -> Field2D:
    return result if isinstance(template, SpectralField) else inverse_transform(result)


# ---------------------------------------------------------------------------
# Transforms and multipliers
# ---------------------------------------------------------------------------


def forward_transform(f: RealField) -> SpectralField:
    """
    Physical samples -> continuum-normalized coefficients

    Args:
        f: Real field

    Returns:
        SpectralField with F[k] = h^2 (-1)^(k1+k2) DFT(f)[k]
    """
    _require_finite(f.values, "forward_transform input")
    grid = f.grid
    coefficients = sfft.fft2(f.values, workers=_fft_workers)
    coefficients *= grid.cell_area * grid.phase
    return SpectralField(grid, coefficients)


def hermitian_defect(F: SpectralField) -> float:
    """Relative size of the anti-Hermitian part, max|F(k) - conj F(-k)| / max|F|"""
    c = F.coefficients
    mirrored = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(c - np.conj(mirrored)))) / scale


def inverse_transform(F: SpectralField) -> RealField:
    """
    Continuum-normalized coefficients -> physical samples

    Raises:
        HermitianSymmetryError: if the coefficients do not describe a real field
    """
    _require_finite(F.coefficients, "inverse_transform input")
    defect = hermitian_defect(F)
    if defect > HERMITIAN_TOLERANCE:
        raise HermitianSymmetryError(
            f"coefficients violate Hermitian symmetry (relative defect {defect:.3e})"
        )
    grid = F.grid
    samples = sfft.ifft2(F.coefficients * grid.phase, workers=_fft_workers)
    return RealField(grid, samples.real / grid.cell_area)


def apply_symbol(F: SpectralField, m: Symbol) -> SpectralField:
    """Pointwise product of coefficients and multiplier"""
    if F.grid != m.grid:
        raise GridMismatchError("field and symbol live on different grids")
    return SpectralField(F.grid, F.coefficients * m.values)


def riesz_symbol(grid: GridSpec, s: float) -> Symbol:
    """|xi|^s with the zero mode pinned to 0 for every s"""
    magnitude = np.array(grid.xi_squared, copy=True)
    magnitude[0, 0] = 1.0
    return Symbol(grid, magnitude ** (0.5 * s), zero_mode=0.0)


def zero_pad(F: SpectralField, factor: int = 2) -> SpectralField:
    """
    Spectral interpolation onto a grid refined by factor on the same box

    The Nyquist row and column are split evenly between +n/2 and -n/2 so the padded
    coefficients remain Hermitian.
    """
    if factor < 1 or factor & (factor - 1):
        raise DomainError(f"oversampling factor must be a power of two, got {factor}")
    n = F.grid.n
    m = n * factor
    c = F.coefficients
    for axis in (0, 1):
        c = _pad_axis(c, n, m, axis)
    return SpectralField(GridSpec(n=m, box_length=F.grid.box_length), c)


def _pad_axis(c: np.ndarray, n: int, m: int, axis: int) -> np.ndarray:
    half = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=np.complex128)

    def take(start: int, stop: int):
        return tuple(slice(start, stop) if a == axis else slice(None) for a in range(c.ndim))

    out[take(0, half)] = c[take(0, half)]
    out[take(m - half + 1, m)] = c[take(half + 1, n)]
    nyquist = 0.5 * c[take(half, half + 1)]
    out[take(half, half + 1)] = nyquist
    out[take(m - half, m - half + 1)] = nyquist
    return out


def gradient_energy(f: Field2D) -> float:
    """||grad f||_{L^2}^2 via Parseval"""
    F = to_spectral(f)
    weights = F.grid.xi_squared * np.abs(F.coefficients) ** 2
    return float(np.sum(weights)) / F.grid.box_length**2


def spectral_inner(f: Field2D, g: Field2D) -> float:
    """Real L^2 inner product <f, g> evaluated on the coefficients"""
    F, G = to_spectral(f), to_spectral(g)
    if F.grid != G.grid:
        raise GridMismatchError("operands live on different grids")
    total = np.sum(F.coefficients * np.conj(G.coefficients))
    return float(total.real) / F.grid.box_length**2


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def lebesgue_norm(f: Field2D, p: float, oversample: bool = False) -> float:
    """
    ||f||_{L^p} by midpoint quadrature with cell weight (L/n)^2

    Args:
        f: Field (spectral input is transformed back first)
        p: Exponent in [1, inf]
        oversample: Evaluate the sup norm on a 2x zero-padded grid

    Returns:
        Nonnegative norm
    """
    if not p >= 1:
        raise DomainError(f"Lebesgue exponent must be >= 1, got {p}")
    if math.isinf(p):
        if oversample:
            f = inverse_transform(zero_pad(to_spectral(f), 2))
        return float(np.max(np.abs(to_real(f).values)))

    real = to_real(f)
    magnitude = np.abs(real.values)
    peak = float(np.max(magnitude))
    if peak == 0.0:
        return 0.0
    # np.sum reduces pairwise; scaling by the peak keeps large p from overflowing
    total = float(np.sum((magnitude / peak) ** p)) * real.grid.cell_area
    return peak * total ** (1.0 / p)


def sobolev_norm(f: Field2D, s: float, a: float, oversample: bool = False) -> float:
    """Homogeneous ||f||_{W^{s,a}} = ||(-Delta)^{s/2} f||_{L^a}"""
    if not a >= 2:
        raise DomainError(f"Sobolev integrability must be >= 2, got {a}")
    F = to_spectral(f)
    lifted = apply_symbol(F, riesz_symbol(F.grid, s))
    return lebesgue_norm(inverse_transform(lifted), a, oversample=oversample)


# ---------------------------------------------------------------------------
# Littlewood-Paley decomposition
# ---------------------------------------------------------------------------


def lp_bump(rho: np.ndarray) -> np.ndarray:
    """psi(rho) = exp(-1/((rho - 3/4)(8/3 - rho))) on (3/4, 8/3), zero elsewhere"""
    rho = np.asarray(rho, dtype=np.float64)
    inside = (rho > LP_INNER_EDGE) & (rho < LP_OUTER_EDGE)
    out = np.zeros_like(rho)
    r = rho[inside]
    out[inside] = np.exp(-1.0 / ((r - LP_INNER_EDGE) * (LP_OUTER_EDGE - r)))
    return out


def default_k_range(grid: GridSpec) -> Tuple[int, int]:
    k_min = math.floor(math.log2(grid.frequency_step)) - 1
    k_max = math.ceil(math.log2(math.pi * grid.n / grid.box_length)) + 1
    return k_min, k_max


@dataclass(frozen=True)
class LPBank:
    """Smooth dyadic partition of unity phi(2^-k xi) for k in [k_min, k_max]"""

    grid: GridSpec
    k_min: int
    k_max: int
    symbols: Dict[int, np.ndarray] = field(repr=False)

    @classmethod
    def build(cls, grid: GridSpec, k_range: Optional[Tuple[int, int]] = None) -> "LPBank":
        k_min, k_max = k_range if k_range is not None else default_k_range(grid)
        if k_min > k_max:
            raise DomainError(f"empty dyadic range [{k_min}, {k_max}]")

        rho = np.sqrt(grid.xi_squared)
        nonzero = rho > 0
        rho_min = float(np.min(rho[nonzero]))
        rho_max = float(np.max(rho))
        # every j whose annulus can touch a lattice frequency
        j_lo = math.floor(math.log2(rho_min * LP_INNER_EDGE / LP_OUTER_EDGE)) - 1
        j_hi = math.ceil(math.log2(rho_max / LP_INNER_EDGE)) + 1
        total = np.zeros_like(rho)
        for j in range(j_lo, j_hi + 1):
            total += lp_bump(rho * 2.0**-j)
        total[~nonzero] = 1.0

        symbols = {}
        for k in range(k_min, k_max + 1):
            phi = lp_bump(rho * 2.0**-k) / total
            phi[~nonzero] = 0.0
            phi.flags.writeable = False
            symbols[k] = phi
        logger.debug(f"LP bank built for n={grid.n}, L={grid.box_length}: k in [{k_min}, {k_max}]")
        return cls(grid, k_min, k_max, symbols)

    @property
    def indices(self) -> List[int]:
        return list(range(self.k_min, self.k_max + 1))

    def symbol(self, k: int) -> Symbol:
        if not self.k_min <= k <= self.k_max:
            raise DomainError(f"dyadic index {k} outside bank range [{self.k_min}, {self.k_max}]")
        return Symbol(self.grid, self.symbols[k], zero_mode=0.0)

    def partition_sum(self) -> np.ndarray:
        return np.sum([self.symbols[k] for k in self.indices], axis=0)

    def uncovered_fraction(self, f: Field2D) -> float:
        """Share of the nonzero-frequency energy that the bank does not resolve"""
        F = to_spectral(f)
        energy = np.abs(F.coefficients) ** 2
        energy[0, 0] = 0.0
        total = float(np.sum(energy))
        if total == 0.0:
            return 0.0
        missing = np.abs(1.0 - self.partition_sum())
        missing[0, 0] = 0.0
        return float(np.sum(energy * missing)) / total


def lp_project(f: Field2D, k: int, bank: LPBank) -> Field2D:
    """P_k f = F^{-1}(phi(2^-k .) f^); returns the same kind of field as f"""
    F = to_spectral(f)
    if F.grid != bank.grid:
        raise GridMismatchError("field and LP bank live on different grids")
    return _same_kind(f, apply_symbol(F, bank.symbol(k)))


def besov_terms(f: Field2D, s: float, p: float, bank: LPBank) -> Dict[int, float]:
    """The sequence 2^{sk} ||P_k f||_{L^p} over the bank range"""
    F = to_spectral(f)
    return {
        k: 2.0 ** (s * k) * lebesgue_norm(inverse_transform(lp_project(F, k, bank)), p)
        for k in bank.indices
    }


def besov_norm(
    f: Field2D,
    s: float,
    p: float,
    r: float,
    bank: LPBank,
    coverage_threshold: float = LP_COVERAGE_THRESHOLD,
) -> float:
    """
    Homogeneous Besov norm: l^r aggregation of 2^{sk} ||P_k f||_{L^p} over the bank range

    A warning is logged when more than coverage_threshold of the field's spectral energy
    lies outside the bank.
    """
    if not (p >= 1 and r >= 1):
        raise DomainError(f"Besov exponents need p, r >= 1, got p={p}, r={r}")
    uncovered = bank.uncovered_fraction(f)
    if uncovered > coverage_threshold:
        logger.warning(
            f"LP bank [{bank.k_min}, {bank.k_max}] misses {uncovered:.3e} of the spectral energy"
        )
    terms = np.array(list(besov_terms(f, s, p, bank).values()))
    if math.isinf(r):
        return float(np.max(terms))
    return float(np.sum(terms**r)) ** (1.0 / r)
