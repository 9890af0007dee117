from typing import Optional


class LabError(Exception):
    """Base class for every error raised by the lab."""


class InvalidInputError(LabError, ValueError):
    """Input rejected before any computation."""


class GeometryError(LabError):
    """Degenerate discrete geometry (coincident nodes, zero radius...)."""


class GraphExtractionError(LabError):
    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message if node is None else f"{message} (first offending node: {node})")
        self.node = node


class SingularityReached(LabError):
    def __init__(self, reason: str, time: float):
        super().__init__(f"singularity reached at t={time:.6g}: {reason}")
        self.reason = reason
        self.time = time


class StabilityError(InvalidInputError):
    """Time step above the stepper's stability bound."""


class CalibrationError(LabError):
    """Bisection closed on a jump of the deviation instead of a root."""


class CoverageError(LabError):
    """A trajectory does not cover the requested time window."""


class MissingSeriesError(LabError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"series '{name}' was not recorded on this trajectory")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class RefinementError(LabError):
    """Local refinement of the entropy search did not converge."""
