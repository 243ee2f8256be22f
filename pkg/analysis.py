"""
Measurement harness: decay fits, the normalized decay monitor, asymptotic deficits, Strichartz
quadrature, dispersive scans and discretization diagnostics

Every routine works on saved fields or trajectories; nothing here re-runs a simulation except
the exact linear propagator, which is a single multiplier application.
"""

import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from config import (
    BOUNDARY_FRAME_FRACTION,
    CROSSOVER_MARGIN,
    MIN_FIT_SAMPLES,
    STRICHARTZ_MIN_SPAN,
)
from evolution import Trajectory, quadrature, time_lebesgue
from exceptions import AnalysisPreconditionError, DomainError
from exponents import RatePrediction, rate_M, strichartz_exponent
from operators import kernel_K, rossby_propagate, semigroup_symbol
from spectral_core import (
    Field2D,
    GridSpec,
    LPBank,
    RealField,
    apply_symbol,
    dealias_mask,
    inverse_transform,
    lebesgue_norm,
    lp_project,
    sobolev_norm,
    to_real,
    to_spectral,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Decay fits
# ---------------------------------------------------------------------------


class DecayFit(BaseModel):
    """Least-squares fit of log(norm) against log(t) on a window"""

    model_config = ConfigDict(frozen=True)

    window: Tuple[float, float]
    times: List[float]
    norms: List[float]
    slope: float
    intercept: float
    r_squared: float = Field(ge=0.0, le=1.0)
    predicted_early: Optional[float] = None
    predicted_late: Optional[float] = None


def fit_decay(
    times: Sequence[float],
    norms: Sequence[float],
    window: Tuple[float, float],
    prediction: Optional[RatePrediction] = None,
) -> DecayFit:
    """
    Fit norms ~ C t^slope on the samples with t in [t_lo, t_hi]

    Args:
        times: Sample times
        norms: Sample norms (positive inside the window)
        window: (t_lo, t_hi)
        prediction: Optional reference rate whose exponents are attached to the fit

    Returns:
        DecayFit with slope, intercept and r^2

    Raises:
        AnalysisPreconditionError: bad window, too few samples or nonpositive norms
    """
    t_lo, t_hi = window
    if not (0 < t_lo < t_hi):
        raise AnalysisPreconditionError(f"fit window must satisfy 0 < t_lo < t_hi, got {window}")
    times = np.asarray(times, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    inside = (times >= t_lo) & (times <= t_hi)
    if inside.sum() < MIN_FIT_SAMPLES:
        raise AnalysisPreconditionError(
            f"fit window {window} holds {int(inside.sum())} samples, need {MIN_FIT_SAMPLES}"
        )
    t_win, n_win = times[inside], norms[inside]
    if np.any(n_win <= 0) or not np.all(np.isfinite(n_win)):
        raise AnalysisPreconditionError("norms must be positive and finite inside the fit window")

    log_t, log_n = np.log(t_win), np.log(n_win)
    slope, intercept = np.polyfit(log_t, log_n, 1)
    residual = log_n - (slope * log_t + intercept)
    total = float(np.sum((log_n - log_n.mean()) ** 2))
    r_squared = 1.0 if total == 0.0 else 1.0 - float(np.sum(residual**2)) / total

    fit = DecayFit(
        window=(float(t_lo), float(t_hi)),
        times=t_win.tolist(),
        norms=n_win.tolist(),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(np.clip(r_squared, 0.0, 1.0)),
        predicted_early=prediction.early_exponent if prediction else None,
        predicted_late=prediction.late_exponent if prediction else None,
    )
    logger.info(f"Decay fit on [{t_lo}, {t_hi}]: slope {fit.slope:.4f}, r^2 {fit.r_squared:.6f}")
    return fit


def branch_window(
    beta: float, branch: str, span: Tuple[float, float], margin: float = CROSSOVER_MARGIN
) -> Tuple[float, float]:
    """
    Part of span lying on one branch of the two-branch rate

    Args:
        beta: Rossby parameter; the crossover sits at |beta|^{-2/3}
        branch: "early" or "late"
        span: Available (t_min, t_max)
        margin: Distance kept from the crossover, as a factor on each side
    """
    t_min, t_max = span
    if beta == 0:
        if branch == "late":
            raise AnalysisPreconditionError("beta = 0 has no late branch")
        return span
    crossover = abs(beta) ** (-2.0 / 3.0)
    if branch == "early":
        window = (t_min, min(t_max, crossover / margin))
    elif branch == "late":
        window = (max(t_min, crossover * margin), t_max)
    else:
        raise DomainError(f"branch must be 'early' or 'late', got {branch!r}")
    if window[0] >= window[1]:
        raise AnalysisPreconditionError(
            f"no {branch} window inside {span} for crossover {crossover:.4g}"
        )
    return window


class DecayMonitor(BaseModel):
    """Running supremum of ||w(tau)||_{W^{s,a}} / M_{s,a}(tau) over saved tau > 0"""

    model_config = ConfigDict(frozen=True)

    s: float
    a: float
    beta: float
    times: List[float]
    normalized: List[float]
    running_sup: List[float]

    @property
    def supremum(self) -> float:
        return self.running_sup[-1] if self.running_sup else 0.0

    def value_at(self, t: float) -> float:
        idx = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.running_sup[idx]


def decay_monitor(trajectory: Trajectory, s: float, a: float, beta: float) -> DecayMonitor:
    times, normalized = [], []
    for t, snap in zip(trajectory.times, trajectory.snapshots):
        if t <= 0:
            continue
        times.append(float(t))
        normalized.append(sobolev_norm(snap, s, a) / rate_M(s, a, beta, float(t)))
    running = np.maximum.accumulate(normalized).tolist() if normalized else []
    return DecayMonitor(
        s=s, a=a, beta=beta, times=times, normalized=normalized, running_sup=running
    )


def decay_series(trajectory: Trajectory, s: float, a: float, beta: float) -> pd.DataFrame:
    """Per-time table of the norm, the reference rate and their quotient"""
    monitor = decay_monitor(trajectory, s, a, beta)
    norms = [
        sobolev_norm(snap, s, a)
        for t, snap in zip(trajectory.times, trajectory.snapshots)
        if t > 0
    ]
    return pd.DataFrame(
        {
            "t": monitor.times,
            "norm": norms,
            "rate": [rate_M(s, a, beta, t) for t in monitor.times],
            "normalized": monitor.normalized,
            "running_sup": monitor.running_sup,
        }
    )


# ---------------------------------------------------------------------------
# Asymptotic profile
# ---------------------------------------------------------------------------


def asymptotic_deficit(
    omega_t: Field2D, mass: float, beta: float, t: float, s: float, a: float
) -> float:
    """M_{s,a}(t)^{-1} ||w(t) - mass K_{beta,t}||_{W^{s,a}}"""
    if not t > 0:
        raise DomainError(f"deficit needs t > 0, got {t}")
    real = to_real(omega_t)
    profile = kernel_K(real.grid, beta, t)
    difference = RealField(real.grid, real.values - mass * profile.values)
    return sobolev_norm(difference, s, a) / rate_M(s, a, beta, t)


def is_nonincreasing(values: Iterable[float], tolerance: float = 0.0) -> bool:
    values = list(values)
    return all(b <= a * (1.0 + tolerance) for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# Strichartz quadrature
# ---------------------------------------------------------------------------


class StrichartzQuadrature(BaseModel):
    """Discrete ||T_beta(t) f||_{L^r([0,T]; W^{s,p})} with its last-decade share"""

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0)
    tail_fraction: float = Field(ge=0.0)
    t_max: float
    beta_power: float


def strichartz_quadrature(
    f: Field2D, beta: float, s: float, p: float, r: float, t_grid: Sequence[float]
) -> StrichartzQuadrature:
    """
    Time-space norm of the linear flow evaluated on t_grid

    Raises:
        DomainError: beta = 0 or r outside [2, inf)
        AnalysisPreconditionError: t_grid does not start at 0 or ends before 10 |beta|^{-2/3}
    """
    if beta == 0:
        raise DomainError("the Strichartz estimate is vacuous for beta = 0")
    if not (2.0 <= r < math.inf):
        raise DomainError(f"time exponent must lie in [2, inf), got {r}")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0):
        raise AnalysisPreconditionError("t_grid must start at 0 and increase strictly")
    required = STRICHARTZ_MIN_SPAN * abs(beta) ** (-2.0 / 3.0)
    t_max = float(t_grid[-1])
    if t_max < required * (1.0 - 1e-12):
        raise AnalysisPreconditionError(
            f"t_grid ends at {t_max}, need at least {required:.4g} for beta={beta}"
        )

    F = to_spectral(f)
    samples = np.array(
        [
            sobolev_norm(apply_symbol(F, semigroup_symbol(F.grid, beta, float(t))), s, p)
            for t in t_grid
        ]
    )
    value = time_lebesgue(t_grid, samples, r)
    total = value**r
    tail = t_grid >= t_max / 10.0
    if total > 0 and tail.sum() >= 2:
        tail_fraction = float(quadrature(samples[tail] ** r, t_grid[tail])) / total
    else:
        tail_fraction = 0.0
    return StrichartzQuadrature(
        value=value,
        tail_fraction=max(tail_fraction, 0.0),
        t_max=t_max,
        beta_power=strichartz_exponent(s, p, r),
    )


# ---------------------------------------------------------------------------
# Dispersive scan
# ---------------------------------------------------------------------------


class DispersiveScan(BaseModel):
    """Normalized dispersive ratios over (k, t) cells"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beta: float
    table: pd.DataFrame
    supremum: float

    def sup_over(self, t_lo: float, t_hi: float, k: Optional[int] = None) -> float:
        rows = self.table[(self.table["t"] >= t_lo) & (self.table["t"] <= t_hi)]
        if k is not None:
            rows = rows[rows["k"] == k]
        return float(rows["ratio"].max())


def dispersive_scan(
    f: Field2D,
    beta: float,
    k_set: Sequence[int],
    t_grid: Sequence[float],
    bank: LPBank,
    oversample: bool = False,
) -> DispersiveScan:
    """
    ratio(k, t) = ||e^{t beta L1} P_k f||_inf |beta t| / (2^{3k} ||P_k f||_{L^1})

    Raises:
        AnalysisPreconditionError: beta = 0, t <= 0, or a scanned block vanishes
    """
    if beta == 0:
        raise AnalysisPreconditionError("dispersive scan needs beta != 0")
    t_grid = [float(t) for t in t_grid]
    if any(t <= 0 for t in t_grid):
        raise AnalysisPreconditionError("dispersive scan needs t > 0")

    F = to_spectral(f)
    scale = lebesgue_norm(to_real(f), 1.0)
    rows = []
    for k in k_set:
        block = lp_project(F, k, bank)
        block_l1 = lebesgue_norm(inverse_transform(block), 1.0)
        if block_l1 <= 1e-14 * scale or block_l1 == 0.0:
            raise AnalysisPreconditionError(f"LP block k={k} vanishes")
        for t in t_grid:
            evolved = rossby_propagate(block, beta, t)
            sup = lebesgue_norm(inverse_transform(evolved), math.inf, oversample=oversample)
            ratio = sup * abs(beta * t) / (2.0 ** (3 * k) * block_l1)
            rows.append({"k": int(k), "t": t, "beta_t": beta * t, "ratio": ratio})

    table = pd.DataFrame(rows, columns=["k", "t", "beta_t", "ratio"])
    if not np.all(np.isfinite(table["ratio"].to_numpy())):
        raise AnalysisPreconditionError("dispersive ratios are not finite")
    supremum = float(table["ratio"].max()) if len(table) else 0.0
    logger.info(f"Dispersive scan: {len(table)} cells, sup ratio {supremum:.4g}")
    return DispersiveScan(beta=beta, table=table, supremum=supremum)


# ---------------------------------------------------------------------------
# Discretization diagnostics
# ---------------------------------------------------------------------------


class BoundaryMass(BaseModel):
    model_config = ConfigDict(frozen=True)

    fraction: float = Field(ge=0.0, le=1.0)
    degenerate: bool = False


def boundary_mass(f: RealField, frame: float = BOUNDARY_FRAME_FRACTION) -> BoundaryMass:
    """Share of int |f| carried by the outer frame max(|x1|, |x2|) > (1/2 - frame) L"""
    x1, x2 = f.grid.coordinates
    magnitude = np.abs(f.values)
    total = float(np.sum(magnitude))
    if total == 0.0:
        return BoundaryMass(fraction=0.0, degenerate=True)
    outer = np.maximum(np.abs(x1), np.abs(x2)) > (0.5 - frame) * f.grid.box_length
    return BoundaryMass(fraction=float(np.sum(magnitude[outer])) / total)


def validity_window(grid: GridSpec) -> float:
    """Largest t for which heat spreading 4 sqrt(t) stays within the box, L^2/16"""
    return grid.box_length**2 / 16.0


def spectral_tail_fraction(f: Field2D) -> float:
    """Share of the spectral energy in modes removed by the 2/3 rule"""
    F = to_spectral(f)
    energy = np.abs(F.coefficients) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    return float(np.sum(energy[~dealias_mask(F.grid)])) / total
