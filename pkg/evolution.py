"""
Time evolution of the viscous beta-plane vorticity equation

    d_t w + div(u w) = Delta w + beta L1 w,   u = grad^perp (-Delta)^{-1} w

The linear part is integrated exactly through its Fourier symbol; the transport term enters
through exponential time differencing (ETDRK4 or first-order ETD). A Picard iteration of the
Duhamel formula, the energy ledger and discrete space-time norms live here too.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import simpson, trapezoid

from config import (
    PHI_TAYLOR_RADIUS,
    PHI_TAYLOR_TERMS,
    PICARD_DIVERGENCE_FACTOR,
)
from exceptions import AnalysisPreconditionError, BlowUpError, DomainError, GridMismatchError
from exponents import ExponentTuple, check_admissible, metric_weights
from operators import (
    linear_symbol,
    semigroup_symbol,
    to_physical_raw,
    transport_coefficients,
)
from spectral_core import (
    Field2D,
    GridSpec,
    RealField,
    SpectralField,
    dealias_mask,
    gradient_energy,
    inverse_transform,
    lebesgue_norm,
    riesz_symbol,
    sobolev_norm,
    to_spectral,
)

logger = logging.getLogger(__name__)

STEP_ROUNDING = 1e-9


def quadrature(values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Composite Simpson along axis 0; two samples fall back to the trapezoid rule"""
    if len(x) == 2:
        return trapezoid(values, x=x, axis=0)
    return simpson(values, x=x, axis=0)


class EvolveConfig(BaseModel):
    """Time-stepping settings"""

    model_config = ConfigDict(frozen=True)

    beta: float = Field(allow_inf_nan=False)
    dt: float = Field(gt=0.0, allow_inf_nan=False)
    t_end: float = Field(gt=0.0, allow_inf_nan=False)
    scheme: Literal["etdrk4", "etd-euler"] = "etdrk4"
    save_every: int = Field(default=1, ge=1)
    dealias: bool = True
    nonlinear: bool = True

    @model_validator(mode="after")
    def validate_horizon(self) -> "EvolveConfig":
        if self.t_end < self.dt * (1.0 - STEP_ROUNDING):
            raise ValueError(f"t_end={self.t_end} is shorter than one step dt={self.dt}")
        ratio = self.t_end / self.dt
        if abs(ratio - round(ratio)) > STEP_ROUNDING * max(1.0, ratio):
            raise ValueError(f"t_end={self.t_end} is not a whole number of steps of dt={self.dt}")
        return self

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Saved snapshots plus the per-step dissipation record"""

    grid: GridSpec
    beta: float
    dt: float
    times: np.ndarray
    snapshots: List[RealField]
    dissipation_times: np.ndarray
    dissipation_series: np.ndarray
    norm_series: Dict[Tuple[float, float], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if len(times) != len(self.snapshots):
            raise AnalysisPreconditionError(
                f"{len(times)} times for {len(self.snapshots)} snapshots"
            )
        if len(times) == 0 or times[0] != 0.0:
            raise AnalysisPreconditionError("trajectory times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise AnalysisPreconditionError("trajectory times must be strictly increasing")
        if any(snap.grid != self.grid for snap in self.snapshots):
            raise GridMismatchError("trajectory snapshots live on different grids")
        object.__setattr__(self, "times", times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def initial(self) -> RealField:
        return self.snapshots[0]

    @property
    def final(self) -> RealField:
        return self.snapshots[-1]

    def index_of(self, t: float, tolerance: float = 1e-9) -> int:
        """Index of the saved time matching t"""
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > tolerance * max(1.0, abs(t)):
            raise AnalysisPreconditionError(f"no snapshot saved at t={t}")
        return idx

    def snapshot_at(self, t: float) -> RealField:
        return self.snapshots[self.index_of(t)]


# ---------------------------------------------------------------------------
# phi-functions
# ---------------------------------------------------------------------------


def _taylor_phi(z: np.ndarray, k: int, terms: int) -> np.ndarray:
    """sum_{j<terms} z^j / (j+k)! by Horner"""
    acc = np.full(z.shape, 1.0 / math.factorial(terms - 1 + k), dtype=np.complex128)
    for j in range(terms - 2, -1, -1):
        acc = acc * z + 1.0 / math.factorial(j + k)
    return acc


def phi_functions(
    z: np.ndarray, radius: float = PHI_TAYLOR_RADIUS, terms: int = PHI_TAYLOR_TERMS
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    phi_1, phi_2, phi_3 of the exponential integrator

    Closed forms are used for |z| >= radius and a truncated Taylor series inside the disc.
    """
    z = np.asarray(z, dtype=np.complex128)
    small = np.abs(z) < radius
    safe = np.where(small, 1.0, z)
    ez = np.exp(z)
    phi1 = (ez - 1.0) / safe
    phi2 = (ez - 1.0 - z) / safe**2
    phi3 = (ez - 1.0 - z - 0.5 * z**2) / safe**3
    if np.any(small):
        zs = z[small]
        phi1[small] = _taylor_phi(zs, 1, terms)
        phi2[small] = _taylor_phi(zs, 2, terms)
        phi3[small] = _taylor_phi(zs, 3, terms)
    return phi1, phi2, phi3


# ---------------------------------------------------------------------------
# Integrator
# ---------------------------------------------------------------------------


class ETDIntegrator:
    """
    Exponential time differencing stepper on spectral coefficients

    The linear symbol -|xi|^2 + i beta xi1/|xi|^2 is handled exactly; the transport term
    -div(u w) enters through the ETDRK4 (Cox-Matthews) or first-order ETD update.
    """

    def __init__(self, grid: GridSpec, config: EvolveConfig):
        """
        Initialize the stepper

        Args:
            grid: Grid the coefficients live on
            config: Time-stepping settings

        Raises:
            DomainError: if ETD-Euler is asked to step past its stability guard
        """
        self.grid = grid
        self.config = config
        self.mask = dealias_mask(grid) if config.dealias else None
        self._initialize_coefficients()

    def _initialize_coefficients(self):
        dt = self.config.dt
        z = dt * linear_symbol(self.grid, self.config.beta)
        logger.info(
            f"Initializing {self.config.scheme} stepper: n={self.grid.n}, "
            f"L={self.grid.box_length}, beta={self.config.beta}, dt={dt}"
        )
        self.exp_full = np.exp(z)

        if self.config.scheme == "etd-euler":
            guard = 2.0 / float(np.max(self.grid.xi_squared))
            if dt > guard:
                logger.error(f"ETD-Euler step {dt} exceeds stability guard {guard:.3e}")
                raise DomainError(f"dt={dt} exceeds the ETD-Euler stability guard {guard:.3e}")
            phi1, _, _ = phi_functions(z)
            self.coeff_euler = dt * phi1
            return

        self.exp_half = np.exp(0.5 * z)
        half_phi1, _, _ = phi_functions(0.5 * z)
        phi1, phi2, phi3 = phi_functions(z)
        self.coeff_half = 0.5 * dt * half_phi1
        self.coeff_f1 = dt * (phi1 - 3.0 * phi2 + 4.0 * phi3)
        self.coeff_f2 = dt * (phi2 - 2.0 * phi3)
        self.coeff_f3 = dt * (4.0 * phi3 - phi2)

    def nonlinear(self, coefficients: np.ndarray) -> np.ndarray:
        """-div(u w) on the lattice, or zero for linear-only runs"""
        if not self.config.nonlinear:
            return np.zeros_like(coefficients)
        return -transport_coefficients(self.grid, coefficients, self.mask)

    def step(self, coefficients: np.ndarray) -> np.ndarray:
        n_0 = self.nonlinear(coefficients)
        if self.config.scheme == "etd-euler":
            return self.exp_full * coefficients + self.coeff_euler * n_0

        stage_a = self.exp_half * coefficients + self.coeff_half * n_0
        n_a = self.nonlinear(stage_a)
        stage_b = self.exp_half * coefficients + self.coeff_half * n_a
        n_b = self.nonlinear(stage_b)
        stage_c = self.exp_half * stage_a + self.coeff_half * (2.0 * n_b - n_0)
        n_c = self.nonlinear(stage_c)
        return (
            self.exp_full * coefficients
            + self.coeff_f1 * n_0
            + 2.0 * self.coeff_f2 * (n_a + n_b)
            + self.coeff_f3 * n_c
        )


def _dissipation(grid: GridSpec, coefficients: np.ndarray) -> float:
    return gradient_energy(SpectralField(grid, coefficients))


def evolve(
    omega0: Field2D,
    config: EvolveConfig,
    norms: Sequence[Tuple[float, float]] = (),
) -> Trajectory:
    """
    Integrate the vorticity equation from omega0

    Args:
        omega0: Initial vorticity
        config: Time-stepping settings
        norms: (s, a) pairs whose Sobolev norms are recorded at every saved time

    Returns:
        Trajectory with snapshots every save_every steps (the last step is always saved)

    Raises:
        BlowUpError: if the state stops being finite
    """
    initial = omega0 if isinstance(omega0, RealField) else inverse_transform(omega0)
    grid = initial.grid
    integrator = ETDIntegrator(grid, config)
    steps = config.steps

    state = to_spectral(initial).coefficients.copy()
    times = [0.0]
    snapshots = [initial]
    dissipation = np.empty(steps + 1)
    dissipation[0] = _dissipation(grid, state)

    logger.info(f"Evolving {steps} steps to t={config.t_end} (save every {config.save_every})")
    for k in range(1, steps + 1):
        state = integrator.step(state)
        t = k * config.dt
        if not np.all(np.isfinite(state)):
            logger.error(f"Non-finite vorticity at step {k}")
            raise BlowUpError("vorticity became non-finite", t)
        dissipation[k] = _dissipation(grid, state)
        if k % config.save_every == 0 or k == steps:
            times.append(t)
            snapshots.append(RealField(grid, to_physical_raw(grid, state)))
            logger.debug(f"Saved snapshot at t={t:.6g}")

    norm_series = {
        (s, a): np.array([sobolev_norm(snap, s, a) for snap in snapshots]) for s, a in norms
    }
    trajectory = Trajectory(
        grid=grid,
        beta=config.beta,
        dt=config.dt,
        times=np.array(times),
        snapshots=snapshots,
        dissipation_times=config.dt * np.arange(steps + 1),
        dissipation_series=dissipation,
        norm_series=norm_series,
    )
    logger.info(f"Evolution finished: {len(snapshots)} snapshots")
    return trajectory


def linear_trajectory(
    omega0: Field2D,
    config: EvolveConfig,
    norms: Sequence[Tuple[float, float]] = (),
) -> Trajectory:
    """
    Exact linear flow T_beta(t) omega0 sampled on the same schedule evolve() would save

    The dissipation series is evaluated in closed form per step, grouping the spectrum by
    |xi|^2 so each step costs one dot product over the distinct shells.
    """
    initial = omega0 if isinstance(omega0, RealField) else inverse_transform(omega0)
    grid = initial.grid
    W0 = to_spectral(initial)
    steps = config.steps

    saved = [k for k in range(1, steps + 1) if k % config.save_every == 0 or k == steps]
    times = [0.0] + [k * config.dt for k in saved]
    snapshots = [initial]
    for t in times[1:]:
        symbol = semigroup_symbol(grid, config.beta, t)
        snapshots.append(RealField(grid, to_physical_raw(grid, W0.coefficients * symbol.values)))

    shells, inverse = np.unique(grid.xi_squared, return_inverse=True)
    weights = np.bincount(inverse.ravel(), weights=np.abs(W0.coefficients).ravel() ** 2)
    d_times = config.dt * np.arange(steps + 1)
    dissipation = np.array(
        [float(np.dot(weights, shells * np.exp(-2.0 * t * shells))) for t in d_times]
    ) / grid.box_length**2

    norm_series = {
        (s, a): np.array([sobolev_norm(snap, s, a) for snap in snapshots]) for s, a in norms
    }
    logger.info(f"Linear flow sampled at {len(snapshots)} times to t={config.t_end}")
    return Trajectory(
        grid=grid,
        beta=config.beta,
        dt=config.dt,
        times=np.array(times),
        snapshots=snapshots,
        dissipation_times=d_times,
        dissipation_series=dissipation,
        norm_series=norm_series,
    )


# ---------------------------------------------------------------------------
# Energy ledger
# ---------------------------------------------------------------------------


class EnergyLedger(BaseModel):
    """||w(t)||^2 + 2 int ||grad w||^2 = ||w(s)||^2 bookkeeping over [t_start, t_end]"""

    model_config = ConfigDict(frozen=True)

    t_start: float
    t_end: float
    e0: float = Field(ge=0.0)
    e_t: float = Field(ge=0.0)
    dissipated: float = Field(ge=0.0)
    residual: float = Field(ge=0.0)
    degenerate: bool = False


def energy_check(trajectory: Trajectory, t_start: float = 0.0) -> EnergyLedger:
    """
    Energy identity residual |e_t + dissipated - e0| / e0 on [t_start, t_end]

    Raises:
        AnalysisPreconditionError: if dissipation samples are missing or t_start is not saved
    """
    d_times, d_series = trajectory.dissipation_times, trajectory.dissipation_series
    expected = int(round(trajectory.t_end / trajectory.dt)) + 1
    if len(d_series) != expected or len(d_times) != expected:
        raise AnalysisPreconditionError(
            f"energy check needs {expected} dissipation samples, found {len(d_series)}"
        )

    start = trajectory.index_of(t_start)
    first = int(round(t_start / trajectory.dt))
    window_t, window_d = d_times[first:], d_series[first:]
    dissipated = 2.0 * float(quadrature(window_d, window_t)) if len(window_t) > 1 else 0.0
    dissipated = max(dissipated, 0.0)

    e0 = lebesgue_norm(trajectory.snapshots[start], 2.0) ** 2
    e_t = lebesgue_norm(trajectory.final, 2.0) ** 2
    if e0 == 0.0:
        residual = 0.0 if e_t == 0.0 and dissipated == 0.0 else math.inf
        degenerate = True
    else:
        residual = abs(e_t + dissipated - e0) / e0
        degenerate = False
    ledger = EnergyLedger(
        t_start=t_start,
        t_end=trajectory.t_end,
        e0=e0,
        e_t=e_t,
        dissipated=dissipated,
        residual=residual,
        degenerate=degenerate,
    )
    logger.info(f"Energy ledger on [{t_start}, {trajectory.t_end}]: residual {ledger.residual:.3e}")
    return ledger


# ---------------------------------------------------------------------------
# Space-time norms
# ---------------------------------------------------------------------------


def time_lebesgue(times: np.ndarray, values: np.ndarray, r: float) -> float:
    """Discrete L^r norm in time of nonnegative samples (Simpson; r = inf is the max)"""
    if not r >= 1:
        raise DomainError(f"time exponent must be >= 1, got {r}")
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        return 0.0
    if math.isinf(r):
        return float(np.max(values))
    if len(values) == 1:
        return 0.0
    integral = float(quadrature(values**r, np.asarray(times, dtype=np.float64)))
    return max(integral, 0.0) ** (1.0 / r)


def ynorm(
    trajectory: Trajectory, s: float, p: float, r: float, t_end: Optional[float] = None
) -> float:
    """L^r([0, t_end]; W^{s,p}) over the saved snapshots"""
    if not r >= 1:
        raise DomainError(f"time exponent must be >= 1, got {r}")
    times = trajectory.times
    stop = len(times) if t_end is None else trajectory.index_of(t_end) + 1
    samples = np.array([sobolev_norm(snap, s, p) for snap in trajectory.snapshots[:stop]])
    return time_lebesgue(times[:stop], samples, r)


# ---------------------------------------------------------------------------
# Picard iteration of the Duhamel formula
# ---------------------------------------------------------------------------


class PicardReport(BaseModel):
    """Per-iterate space-time norms and distances of the Duhamel fixed-point iteration"""

    model_config = ConfigDict(frozen=True)

    exponents: ExponentTuple
    beta: float
    t_end: float
    steps: int
    nonlinear: bool
    iterate_count: int
    y1_norms: List[float]
    y2_norms: List[float]
    d_distances: List[float]
    contraction_ratios: List[float]
    ball_ratios: List[float]
    metric_weights: Tuple[float, float]
    non_contractive: bool = False

    @property
    def contracts(self) -> bool:
        return not self.non_contractive


class PicardSolver:
    """Discrete Picard map Phi(w)(t_k) = T(t_k) w0 - int_0^t_k T(t_k - tau) div(u w)(tau) dtau"""

    def __init__(
        self,
        grid: GridSpec,
        beta: float,
        t_end: float,
        steps: int,
        dealias: bool = True,
        nonlinear: bool = True,
    ):
        if steps < 2:
            raise DomainError(f"Picard quadrature needs at least 2 steps, got {steps}")
        self.grid = grid
        self.beta = beta
        self.nonlinear = nonlinear
        self.mask = dealias_mask(grid) if dealias else None
        self.times = (t_end / steps) * np.arange(steps + 1)
        logger.info(f"Initializing Picard solver: {steps} steps to t={t_end}, beta={beta}")
        # T(t_m) for every node offset m
        self.propagators = np.stack(
            [semigroup_symbol(grid, beta, float(t)).values for t in self.times]
        )

    def linear(self, coefficients: np.ndarray) -> np.ndarray:
        return self.propagators * coefficients[None, :, :]

    def apply(self, iterate: np.ndarray, linear: np.ndarray) -> np.ndarray:
        """One application of the Picard map to a node-indexed stack of coefficients"""
        if not self.nonlinear:
            return linear.copy()
        forcing = np.stack(
            [transport_coefficients(self.grid, c, self.mask) for c in iterate]
        )
        result = linear.copy()
        for k in range(1, len(self.times)):
            # integrand T(t_k - t_j) F_j for j = 0..k
            integrand = self.propagators[k::-1] * forcing[: k + 1]
            x = self.times[: k + 1]
            duhamel = quadrature(integrand.real, x) + 1j * quadrature(integrand.imag, x)
            result[k] -= duhamel
        return result

    def space_time_norm(self, stack: np.ndarray, s: float, p: float, r: float) -> float:
        """Discrete L^r([0, t_end]; W^{s,p}) of a node-indexed coefficient stack"""
        lift = riesz_symbol(self.grid, s).values
        samples = np.array(
            [
                lebesgue_norm(RealField(self.grid, to_physical_raw(self.grid, c * lift)), p)
                for c in stack
            ]
        )
        return time_lebesgue(self.times, samples, r)


def picard_solve(
    omega0: Field2D,
    beta: float,
    exponents: ExponentTuple,
    t_end: float,
    iterations: int,
    steps: int = 100,
    dealias: bool = True,
    nonlinear: bool = True,
) -> Tuple[PicardReport, RealField]:
    """
    Iterate the Duhamel map starting from the linear solution

    Args:
        omega0: Initial vorticity
        beta: Rossby parameter (nonzero)
        exponents: Admissible exponent tuple defining Y1, Y2 and the metric
        t_end: Horizon of the discrete space-time norms
        iterations: Number of Picard applications (>= 2)
        steps: Uniform time nodes for the Duhamel quadrature
        dealias: Apply the 2/3 rule inside the transport term
        nonlinear: Set False to zero the transport term

    Returns:
        Tuple of (report, final iterate at t_end). A report flagged non_contractive means the
        iteration was aborted after the distance grew by more than the divergence factor.
    """
    if beta == 0:
        raise DomainError("Picard iteration needs beta != 0")
    if iterations < 2:
        raise DomainError(f"Picard iteration needs at least 2 iterations, got {iterations}")
    admissibility = check_admissible(exponents)
    if not admissibility.well_posed:
        raise DomainError(f"exponent tuple is not admissible: failed {admissibility.failed()}")

    W0 = to_spectral(omega0)
    solver = PicardSolver(W0.grid, beta, t_end, steps, dealias=dealias, nonlinear=nonlinear)
    delta, p1, r1, p2, r2 = exponents.as_tuple()
    weights = metric_weights(exponents, beta)

    def y_norms(stack: np.ndarray) -> Tuple[float, float]:
        return (
            solver.space_time_norm(stack, -1.0 + delta, p1, r1),
            solver.space_time_norm(stack, delta, p2, r2),
        )

    linear = solver.linear(W0.coefficients)
    linear_y = y_norms(linear)
    current = linear
    y1_norms, y2_norms = [linear_y[0]], [linear_y[1]]
    ball_ratios = [1.0 if max(linear_y) > 0 else 0.0]
    distances: List[float] = []
    ratios: List[float] = []
    non_contractive = False

    for m in range(1, iterations + 1):
        candidate = solver.apply(current, linear)
        if not np.all(np.isfinite(candidate)):
            logger.error(f"Picard iterate {m} is non-finite")
            raise BlowUpError(f"Picard iterate {m} became non-finite", t_end)
        y1, y2 = y_norms(candidate)
        diff1, diff2 = y_norms(candidate - current)
        distance = weights[0] * diff1 + weights[1] * diff2

        y1_norms.append(y1)
        y2_norms.append(y2)
        ball_ratios.append(
            max(
                y1 / linear_y[0] if linear_y[0] > 0 else 0.0,
                y2 / linear_y[1] if linear_y[1] > 0 else 0.0,
            )
        )
        if distances:
            previous = distances[-1]
            if previous > 0:
                ratios.append(distance / previous)
            else:
                ratios.append(0.0 if distance == 0 else math.inf)
        distances.append(distance)
        current = candidate
        logger.debug(f"Picard iterate {m}: d={distance:.3e}, Y1={y1:.3e}, Y2={y2:.3e}")

        if ratios and ratios[-1] > PICARD_DIVERGENCE_FACTOR:
            logger.warning(f"Picard iteration diverging at iterate {m} (ratio {ratios[-1]:.3e})")
            non_contractive = True
            break

    report = PicardReport(
        exponents=exponents,
        beta=beta,
        t_end=t_end,
        steps=steps,
        nonlinear=nonlinear,
        iterate_count=len(y1_norms),
        y1_norms=y1_norms,
        y2_norms=y2_norms,
        d_distances=distances,
        contraction_ratios=ratios,
        ball_ratios=ball_ratios,
        metric_weights=weights,
        non_contractive=non_contractive,
    )
    final = RealField(W0.grid, to_physical_raw(W0.grid, current[-1]))
    logger.info(f"Picard finished after {report.iterate_count - 1} iterations")
    return report, final
