"""Exception hierarchy for anomalylens.

Everything derives from ValueError so callers that only care about
"bad input" can keep catching that.
"""

from typing import Optional


class AnomalyLensError(ValueError):
    """Base class for all anomalylens errors."""


class ScheduleSyntaxError(AnomalyLensError):
    """Schedule text does not match the grammar."""

    def __init__(self, position: int, token: str, expected: Optional[str] = None):
        self.position = position
        self.token = token
        self.expected = expected
        detail = f"unexpected {token!r}" if token else "unexpected end of input"
        if expected:
            detail += f", expected {expected}"
        super().__init__(f"position {position}: {detail}")


class ScheduleValidationError(AnomalyLensError):
    """Schedule parses but breaks a structural rule (op after terminal, bad version...)."""

    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"position {position}: {reason}")


class EnumerationCeilingError(AnomalyLensError):
    """Generator search space exceeds the configured ceiling."""

    def __init__(self, bound: int, ceiling: int):
        self.bound = bound
        self.ceiling = ceiling
        super().__init__(
            f"search space bound {bound} exceeds ceiling {ceiling} "
            "(raise it with --ceiling or ANOMALY_LENS_CEILING)"
        )


class ReductionError(AnomalyLensError):
    """A cycle could not be reduced to two transactions."""


class UnmatchedCombinationError(AnomalyLensError):
    """A two-transaction kind combination has no name. Indicates a gap in the name tables."""


class InvalidOrderingError(AnomalyLensError):
    """Unknown terminal ordering token for the write-write status table."""


class SimulationConfigError(AnomalyLensError):
    """Scheduler configuration is out of range."""
