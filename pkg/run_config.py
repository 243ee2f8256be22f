"""
Run configuration: the flat key=value file format and its validated model

A config file is UTF-8 text with one ``key = value`` per line. Blank lines and ``#``
comments are ignored; every key may appear at most once. Lists are comma-separated, norm
requests are ``s:a`` pairs (``a`` may be ``inf``) and Strichartz requests are ``s:p:r``
triples. Example::

    n = 256
    box_length = 40
    beta = 10
    initial = dipole
    dt = 0.001
    t_end = 1
    norms = 0:2, 0:inf, 1:2
"""

import logging
import math
import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from config import DEFAULT_BOX_LENGTH, DEFAULT_GRID_N, DEFAULT_OUT_DIR, MIN_GRID_N
from evolution import STEP_ROUNDING, EvolveConfig
from exceptions import ConfigError
from exponents import ExponentTuple, canonical_family
from initial_data import InitialDataSpec
from spectral_core import GridSpec

logger = logging.getLogger(__name__)

RUN_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class RunConfig(BaseModel):
    """Everything one experiment needs, validated on construction"""

    model_config = ConfigDict(frozen=True)

    # grid and physics
    n: int = Field(default=DEFAULT_GRID_N, ge=MIN_GRID_N)
    box_length: float = Field(default=DEFAULT_BOX_LENGTH, gt=0.0, allow_inf_nan=False)
    beta: float = Field(default=0.0, allow_inf_nan=False)
    delta: float = Field(default=0.0, ge=0.0, le=0.2)
    exponents: Optional[ExponentTuple] = None

    # initial data
    initial: InitialDataSpec = InitialDataSpec()

    # evolution
    scheme: Literal["etdrk4", "etd-euler"] = "etdrk4"
    dt: float = Field(default=1e-3, gt=0.0, allow_inf_nan=False)
    t_end: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    save_every: int = Field(default=1, ge=1)
    dealias: bool = True
    linear_only: bool = False
    oversample: bool = False

    # analysis requests
    norms: List[Tuple[float, float]] = [(0.0, 2.0)]
    checkpoint_times: List[float] = []
    fit_window: Optional[Tuple[float, float]] = None
    fit_branch: Literal["early", "late"] = "late"
    deficit_times: List[float] = []
    energy_t_start: float = Field(default=0.0, ge=0.0)
    strichartz: List[Tuple[float, float, float]] = []
    strichartz_t_max: Optional[float] = Field(default=None, gt=0.0)
    strichartz_samples: int = Field(default=2001, ge=3)
    dispersive_k: List[int] = [-1, 0, 1]
    dispersive_t_range: Tuple[float, float] = (1.0, 100.0)
    dispersive_samples: int = Field(default=91, ge=2)
    picard_iterations: int = Field(default=4, ge=2)
    picard_steps: int = Field(default=100, ge=2)
    smallness_threshold: float = Field(default=0.01, gt=0.0)

    # output
    out_dir: str = DEFAULT_OUT_DIR
    run_id: str = "run"

    @field_validator("n")
    @classmethod
    def validate_n(cls, v: int) -> int:
        if v & (v - 1) != 0:
            raise ValueError(f"n must be a power of two, got {v}")
        return v

    @field_validator("norms")
    @classmethod
    def validate_norms(cls, v: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        for s, a in v:
            if not (math.isfinite(s) and s >= 0):
                raise ValueError(f"norm regularity must be finite and >= 0, got s={s}")
            if not a >= 2:
                raise ValueError(f"norm integrability must lie in [2, inf], got a={a}")
        return v

    @field_validator("run_id")
    @classmethod
    def validate_run_id(cls, v: str) -> str:
        if not RUN_ID_PATTERN.match(v):
            raise ValueError(f"run id must be nonempty and filesystem-safe, got {v!r}")
        return v

    @model_validator(mode="after")
    def validate_schedule(self) -> "RunConfig":
        self.evolve_config  # step schedule
        stride = self.dt * self.save_every
        for t in self.checkpoint_times:
            if not 0.0 <= t <= self.t_end * (1.0 + STEP_ROUNDING):
                raise ValueError(f"checkpoint time {t} lies outside [0, {self.t_end}]")
            ratio = t / stride
            on_grid = abs(ratio - round(ratio)) <= STEP_ROUNDING * max(1.0, ratio)
            if not (on_grid or math.isclose(t, self.t_end)):
                raise ValueError(f"checkpoint time {t} is not a saved time (stride {stride})")
        if self.fit_window is not None and not 0.0 < self.fit_window[0] < self.fit_window[1]:
            raise ValueError(f"fit window must satisfy 0 < lo < hi, got {self.fit_window}")
        lo, hi = self.dispersive_t_range
        if not 0.0 < lo < hi:
            raise ValueError(f"dispersive time range must satisfy 0 < lo < hi, got {lo}, {hi}")
        return self

    @property
    def grid(self) -> GridSpec:
        return GridSpec(n=self.n, box_length=self.box_length)

    @property
    def evolve_config(self) -> EvolveConfig:
        return EvolveConfig(
            beta=self.beta,
            dt=self.dt,
            t_end=self.t_end,
            scheme=self.scheme,
            save_every=self.save_every,
            dealias=self.dealias,
            nonlinear=not self.linear_only,
        )

    @property
    def exponent_tuple(self) -> ExponentTuple:
        """Explicit tuple, or the canonical family at delta"""
        return self.exponents if self.exponents is not None else canonical_family(self.delta)

    def with_overrides(self, **updates: Any) -> "RunConfig":
        """Copy with some fields replaced, validated again"""
        updates = {k: v for k, v in updates.items() if v is not None}
        if not updates:
            return self
        data = self.model_dump()
        data.update(updates)
        return RunConfig.model_validate(data)


# ---------------------------------------------------------------------------
# key=value parsing
# ---------------------------------------------------------------------------


def _float(text: str) -> float:
    return float(text.strip())


def _int(text: str) -> int:
    return int(text.strip())


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _items(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _float_list(text: str) -> List[float]:
    return [_float(item) for item in _items(text)]


def _int_list(text: str) -> List[int]:
    return [_int(item) for item in _items(text)]


def _pair(text: str) -> Tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return values[0], values[1]


def _colon_groups(text: str, size: int) -> List[Tuple[float, ...]]:
    groups = []
    for item in _items(text):
        parts = [_float(part) for part in item.split(":")]
        if len(parts) != size:
            raise ValueError(f"expected {size} colon-separated numbers, got {item!r}")
        groups.append(tuple(parts))
    return groups


def _exponents(text: str) -> Union[Dict[str, float], None]:
    if text.strip().lower() == "canonical":
        return None
    values = _float_list(text)
    if len(values) != 5:
        raise ValueError(f"expected 'canonical' or five numbers delta,p1,r1,p2,r2, got {text!r}")
    return dict(zip(("delta", "p1", "r1", "p2", "r2"), values))


def _text(text: str) -> str:
    return text.strip()


# key -> (converter, nested section or None)
KEYS: Dict[str, Tuple[Callable[[str], Any], Optional[str]]] = {
    "n": (_int, None),
    "box_length": (_float, None),
    "beta": (_float, None),
    "delta": (_float, None),
    "exponents": (_exponents, None),
    "initial": (_text, "initial"),
    "mass": (_float, "initial"),
    "width": (_float, "initial"),
    "center": (_pair, "initial"),
    "amplitude": (_float, "initial"),
    "separation": (_float, "initial"),
    "seed": (_int, "initial"),
    "band": (_pair, "initial"),
    "scheme": (_text, None),
    "dt": (_float, None),
    "t_end": (_float, None),
    "save_every": (_int, None),
    "dealias": (_bool, None),
    "linear_only": (_bool, None),
    "oversample": (_bool, None),
    "norms": (lambda text: _colon_groups(text, 2), None),
    "checkpoint_times": (_float_list, None),
    "fit_window": (_pair, None),
    "fit_branch": (_text, None),
    "deficit_times": (_float_list, None),
    "energy_t_start": (_float, None),
    "strichartz": (lambda text: _colon_groups(text, 3), None),
    "strichartz_t_max": (_float, None),
    "strichartz_samples": (_int, None),
    "dispersive_k": (_int_list, None),
    "dispersive_t_range": (_pair, None),
    "dispersive_samples": (_int, None),
    "picard_iterations": (_int, None),
    "picard_steps": (_int, None),
    "smallness_threshold": (_float, None),
    "out_dir": (_text, None),
    "run_id": (_text, None),
}


def parse_run_config(text: str) -> RunConfig:
    """
    Parse key=value text into a RunConfig

    Raises:
        ConfigError: for malformed lines, unknown or repeated keys, unparsable values and
            values the model rejects; the error carries the 1-based line number
    """
    lines: Dict[str, int] = {}
    data: Dict[str, Any] = {}
    initial: Dict[str, Any] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", number)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", number)
        lines[key] = number

        converter, section = KEYS[key]
        try:
            converted = converter(value)
        except ValueError as e:
            raise ConfigError(f"bad value for {key!r}: {e}", number) from e
        if section == "initial":
            initial["family" if key == "initial" else key] = converted
        else:
            data[key] = converted

    if initial:
        data["initial"] = initial

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = [part for part in error["loc"] if isinstance(part, str)]
        line = _line_for(loc, lines)
        raise ConfigError(f"{'.'.join(loc) or 'config'}: {error['msg']}", line) from e

    logger.debug(f"Parsed run config {config.run_id} from {len(lines)} keys")
    return config


def _line_for(loc: List[str], lines: Dict[str, int]) -> Optional[int]:
    """Line of the key a validation error points at, if the file set it"""
    for part in reversed(loc):
        key = "initial" if part == "family" else part
        if key in lines:
            return lines[key]
    return None


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and parse a config file"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    logger.info(f"Loading run config from {path}")
    return parse_run_config(text)
