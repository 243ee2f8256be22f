"""
Exponent bookkeeping for the well-posedness and decay theory

Validates exponent tuples (delta, p1, r1, p2, r2) against the admissibility inequalities and
evaluates the reference decay rates the analysis module fits against.
"""

import logging
import math
from typing import Dict, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from config import ADMISSIBILITY_SLACK
from exceptions import DomainError
from spectral_core import Field2D, sobolev_norm, to_real

logger = logging.getLogger(__name__)

MAX_DELTA = 0.2
ASYMPTOTIC_DELTA_BOUND = 1.0 / 13.0


class ExponentTuple(BaseModel):
    """Admissibility data (delta, p1, r1, p2, r2)"""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(ge=0.0, le=MAX_DELTA, allow_inf_nan=False)
    p1: float = Field(gt=2.0, allow_inf_nan=False)
    r1: float = Field(gt=2.0, allow_inf_nan=False)
    p2: float = Field(gt=2.0, allow_inf_nan=False)
    r2: float = Field(ge=2.0, allow_inf_nan=False)

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.delta, self.p1, self.r1, self.p2, self.r2)


class InequalityCheck(BaseModel):
    """One inequality: holds when slack >= -eps (non-strict) or slack > eps (strict)"""

    model_config = ConfigDict(frozen=True)

    name: str
    slack: float
    strict: bool
    holds: bool


def _check(name: str, lesser: float, greater: float, strict: bool) -> InequalityCheck:
    slack = greater - lesser
    holds = slack > ADMISSIBILITY_SLACK if strict else slack >= -ADMISSIBILITY_SLACK
    return InequalityCheck(name=name, slack=slack, strict=strict, holds=holds)


GLOBAL_CHECKS = (
    "delta_below_two_over_p",
    "p_pair_balance",
    "r1_lower",
    "r1_upper",
    "r2_lower",
    "r2_upper",
    "r2_branch_lower",
    "r2_branch_upper",
)
SMOOTHING_CHECKS = ("r1_regularity", "r2_regularity")
DECAY_CHECKS = ("delta_below_one_thirteenth", "equal_p")
ASYMPTOTIC_CHECKS = ("asymptotic_r1",)


class AdmissibilityReport(BaseModel):
    """Per-inequality verdicts with slacks; overall verdicts are conjunctions"""

    model_config = ConfigDict(frozen=True)

    exponents: ExponentTuple
    checks: Dict[str, InequalityCheck]
    branch: Literal["r2_above_2", "r2_equals_2"]

    def _all(self, names) -> bool:
        return all(self.checks[name].holds for name in names)

    @computed_field
    @property
    def thm1_1(self) -> bool:
        """Global existence for small data"""
        return self._all(GLOBAL_CHECKS)

    @computed_field
    @property
    def thm1_2(self) -> bool:
        """Global existence plus instantaneous smoothing"""
        return self.thm1_1 and self._all(SMOOTHING_CHECKS)

    @computed_field
    @property
    def thm1_3(self) -> bool:
        """Decay at the linear rate and convergence to the mass-weighted linear kernel"""
        return self.decays and self._all(ASYMPTOTIC_CHECKS)

    @property
    def well_posed(self) -> bool:
        return self.thm1_1

    @property
    def smoothing(self) -> bool:
        return self.thm1_2

    @property
    def decays(self) -> bool:
        """Decay at the linear rate, without the asymptotic-profile condition"""
        return self.thm1_2 and self._all(DECAY_CHECKS)

    @property
    def asymptotic_profile(self) -> bool:
        return self.thm1_3

    def failed(self) -> Tuple[str, ...]:
        return tuple(name for name, check in self.checks.items() if not check.holds)


def check_admissible(exponents: ExponentTuple) -> AdmissibilityReport:
    """
    Evaluate every admissibility inequality with strict and non-strict comparisons preserved

    Args:
        exponents: Validated exponent tuple

    Returns:
        AdmissibilityReport with slacks and the overall verdicts
    """
    delta, p1, r1, p2, r2 = exponents.as_tuple()
    q1, q2, s1, s2 = 1.0 / p1, 1.0 / p2, 1.0 / r1, 1.0 / r2

    checks = [
        _check("delta_below_two_over_p", delta, min(2 * q1, 2 * q2), strict=True),
        _check("p_pair_balance", max(1 - q1, 1 - q2), q1 + q2 - delta / 2, strict=False),
        _check(
            "r1_lower",
            max(0.5 - q1 + delta / 2 - 1.5 * (1 - 2 * q2), 0.5 * (1 - 2 * q1)),
            s1,
            strict=False,
        ),
        _check("r1_upper", s1, min(0.5 - q1 + delta / 2, 1.25 * (1 - 2 * q1)), strict=False),
        _check("r2_lower", 1 - q2 + delta / 2 - 1.5 * (1 - 2 * q1), s2, strict=False),
        _check("r2_upper", s2, 1 - q2 + delta / 2, strict=False),
    ]

    if r2 > 2.0:
        branch = "r2_above_2"
        checks.append(_check("r2_branch_lower", 0.5 * (1 - 2 * q2), s2, strict=False))
        checks.append(_check("r2_branch_upper", s2, 1.25 * (1 - 2 * q2), strict=False))
    else:
        branch = "r2_equals_2"
        checks.append(_check("r2_branch_lower", 0.5 * (1 - 2 * q2), 0.5, strict=True))
        checks.append(_check("r2_branch_upper", 0.5, 1.25 * (1 - 2 * q2), strict=True))

    checks.extend(
        [
            _check("r1_regularity", s1, 0.5 - q1 + delta / 2, strict=True),
            _check("r2_regularity", s2, 1 - q2 + delta / 2, strict=True),
            _check("delta_below_one_thirteenth", delta, ASYMPTOTIC_DELTA_BOUND, strict=True),
        ]
    )

    # decay and profile statements take a single Lebesgue exponent p1 = p2
    defect = abs(q1 - q2)
    checks.append(
        InequalityCheck(
            name="equal_p",
            slack=-defect,
            strict=False,
            holds=defect <= ADMISSIBILITY_SLACK,
        )
    )
    checks.append(
        _check(
            "asymptotic_r1",
            0.5 - q1 + delta / 2 - 1.5 * (1 - 2 * q1),
            s1,
            strict=True,
        )
    )

    report = AdmissibilityReport(
        exponents=exponents, checks={c.name: c for c in checks}, branch=branch
    )
    logger.debug(f"Admissibility for {exponents.as_tuple()}: failed {report.failed()}")
    return report


def canonical_p(delta: float) -> float:
    """p with 1/p = 1/3 + delta/6"""
    if not 0.0 <= delta <= MAX_DELTA:
        raise DomainError(f"delta must lie in [0, 1/5], got {delta}")
    return 1.0 / (1.0 / 3.0 + delta / 6.0)


def canonical_family(delta: float) -> ExponentTuple:
    """(delta, p, r1, p, r2) with 1/r1 = (1 - delta)/6 and 1/r2 = (1 + 5 delta)/6"""
    p = canonical_p(delta)
    return ExponentTuple(
        delta=delta, p1=p, r1=6.0 / (1.0 - delta), p2=p, r2=6.0 / (1.0 + 5.0 * delta)
    )


def smallness_value(omega0: Field2D, beta: float, delta: float) -> float:
    """|beta|^{-delta/3} ||w0||_{H^{-1+delta}} + |beta|^{-(1+delta)/3} ||w0||_{H^delta}"""
    if beta == 0 or not math.isfinite(beta):
        raise DomainError(f"smallness needs a finite nonzero beta, got {beta}")
    real = to_real(omega0)
    scale = float(np.sum(np.abs(real.values))) * real.grid.cell_area
    if scale > 0 and abs(real.mass) > 1e-10 * scale:
        logger.warning(
            f"initial vorticity has nonzero mean (mass {real.mass:.3e}); "
            f"the negative-order norm ignores it"
        )
    low = sobolev_norm(omega0, -1.0 + delta, 2.0)
    high = sobolev_norm(omega0, delta, 2.0)
    b = abs(beta)
    return b ** (-delta / 3.0) * low + b ** (-(1.0 + delta) / 3.0) * high


# ---------------------------------------------------------------------------
# Rate functions
# ---------------------------------------------------------------------------


def _inverse(exponent: float) -> float:
    return 0.0 if math.isinf(exponent) else 1.0 / exponent


def _dispersive_factor(beta: float, t: float, gain: float) -> float:
    """min{1, |beta|^{-gain} t^{-3 gain / 2}}, identically 1 for beta = 0"""
    if beta == 0:
        return 1.0
    return min(1.0, abs(beta) ** (-gain) * t ** (-1.5 * gain))


def _require_positive_time(t: float) -> None:
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"rate functions need t > 0, got {t}")


def rate_M(s: float, a: float, beta: float, t: float) -> float:
    """t^{-s/2-1+1/a} min{1, |beta|^{-1+2/a} t^{-(3/2)(1-2/a)}}"""
    _require_positive_time(t)
    if not a >= 2:
        raise DomainError(f"integrability must lie in [2, inf], got {a}")
    q = _inverse(a)
    return t ** (-s / 2.0 - 1.0 + q) * _dispersive_factor(beta, t, 1.0 - 2.0 * q)


def rate_N(s: float, p: float, beta: float, t: float) -> float:
    """t^{-s/2-1+2/p} min{1, |beta|^{-1+2/p} t^{-(3/2)(1-2/p)}}"""
    _require_positive_time(t)
    q = _inverse(p)
    return t ** (-s / 2.0 - 1.0 + 2.0 * q) * _dispersive_factor(beta, t, 1.0 - 2.0 * q)


def rate_besov(s: float, s_prime: float, p: float, beta: float, t: float) -> float:
    """Semigroup smoothing rate from regularity s to s_prime in L^p-based Besov norms"""
    _require_positive_time(t)
    q = _inverse(p)
    return t ** (-(s_prime - s) / 2.0 - 1.0 + 2.0 * q) * _dispersive_factor(
        beta, t, 1.0 - 2.0 * q
    )


class RatePrediction(BaseModel):
    """Two-branch reference rate with its exponents and crossover time"""

    model_config = ConfigDict(frozen=True)

    s: float = Field(ge=0.0, allow_inf_nan=False)
    a: float = Field(ge=2.0)
    beta: float = Field(allow_inf_nan=False)

    @computed_field
    @property
    def early_exponent(self) -> float:
        return -self.s / 2.0 - 1.0 + _inverse(self.a)

    @computed_field
    @property
    def late_exponent(self) -> float:
        return self.early_exponent - 1.5 * (1.0 - 2.0 * _inverse(self.a))

    @computed_field
    @property
    def crossover_time(self) -> float:
        return math.inf if self.beta == 0 else abs(self.beta) ** (-2.0 / 3.0)

    def value(self, t: float) -> float:
        return rate_M(self.s, self.a, self.beta, t)


def strichartz_exponent(s: float, p: float, r: float) -> float:
    """beta-power -(1/3)(2/r + 2/p - 1 - s) of the Strichartz estimate"""
    return -(2.0 * _inverse(r) + 2.0 * _inverse(p) - 1.0 - s) / 3.0


def check_strichartz_admissible(s: float, p: float, r: float) -> bool:
    """Whether (s, p, r) lies in the range where the Strichartz estimate is available"""
    if not (2.0 < p < math.inf) or r < 2.0:
        return False
    gap = 1.0 - 2.0 / p
    lower, upper = 0.5 * gap + s / 2.0, 1.25 * gap + s / 2.0
    inv_r = _inverse(r)
    if r > 2.0:
        return (
            _check("lower", lower, inv_r, strict=False).holds
            and _check("upper", inv_r, upper, strict=False).holds
        )
    return (
        _check("lower", lower, inv_r, strict=True).holds
        and _check("upper", inv_r, upper, strict=True).holds
    )


def metric_weights(exponents: ExponentTuple, beta: float) -> Tuple[float, float]:
    """beta-weights of the Y1 and Y2 terms in the contraction metric"""
    if beta == 0:
        raise DomainError("the contraction metric needs beta != 0")
    delta, p1, r1, p2, r2 = exponents.as_tuple()
    b = abs(beta)
    w1 = b ** (-(1.0 + delta - 2.0 / p1 - 2.0 / r1) / 3.0)
    w2 = b ** (-(2.0 + delta - 2.0 / p2 - 2.0 / r2) / 3.0)
    return w1, w2


def linear_bound_exponents(exponents: ExponentTuple) -> Tuple[float, float]:
    """Strichartz beta-powers bounding the linear flow in Y1 and Y2"""
    delta, p1, r1, p2, r2 = exponents.as_tuple()
    return strichartz_exponent(-1.0 + delta, p1, r1), strichartz_exponent(delta, p2, r2)
