"""
Exception types shared across the simulator.
"""

from dataclasses import dataclass
from typing import List, Optional


class SimultaneityError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidFrameError(SimultaneityError, ValueError):
    """Raised for |beta| >= 1 or non-finite event components."""


class UndefinedRegimeError(SimultaneityError):
    """Raised when Multisimultaneity is asked to predict at Boundary timing."""


class StatsError(SimultaneityError, ValueError):
    """Raised when records cannot support the requested estimator."""


class SamplingError(SimultaneityError, ValueError):
    """Raised for unnormalized distributions or empty sample requests."""


@dataclass(frozen=True)
class Violation:
    """One broken config rule."""

    field: str
    rule: str
    message: str
    line: Optional[int] = None

    def __str__(self) -> str:
        prefix = f"line {self.line}: " if self.line is not None else ""
        return f"{prefix}{self.field}: {self.rule} ({self.message})"


class ConfigValidationError(SimultaneityError):
    """Raised when a config or run plan breaks one or more rules."""

    def __init__(self, violations: List[Violation]):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid configuration: {summary}")
