"""
Exception hierarchy for the beta-plane laboratory

The CLI maps these onto exit codes (see config.EXIT_*).
"""

from typing import Optional


class BetaPlaneError(Exception):
    """Base class for all laboratory errors"""


class DomainError(BetaPlaneError, ValueError):
    """A parameter lies outside the range an operation is defined on"""


class GridMismatchError(BetaPlaneError, ValueError):
    """Two operands live on different grids"""


class HermitianSymmetryError(BetaPlaneError, ValueError):
    """Spectral coefficients do not describe a real field"""


class NonFiniteFieldError(BetaPlaneError, ValueError):
    """A field contains NaN or Inf samples"""


class BlowUpError(BetaPlaneError, RuntimeError):
    """A time integration produced non-finite values"""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


class NonContractiveError(BetaPlaneError, RuntimeError):
    """The Picard map failed to contract"""


class AnalysisPreconditionError(BetaPlaneError, ValueError):
    """Input to an analysis routine violates its preconditions"""


class ConfigError(BetaPlaneError, ValueError):
    """Run configuration could not be parsed or validated"""

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


class CheckpointError(BetaPlaneError, ValueError):
    """A checkpoint file is malformed"""

    def __init__(
        self,
        message: str,
        offset: int,
        expected: Optional[int] = None,
        actual: Optional[int] = None,
    ):
        detail = f" at byte offset {offset}"
        if expected is not None and actual is not None:
            detail += f" (expected {expected} bytes, got {actual})"
        super().__init__(message + detail)
        self.offset = offset
        self.expected = expected
        self.actual = actual
