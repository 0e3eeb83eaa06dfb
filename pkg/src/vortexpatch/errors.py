"""Exception hierarchy shared by the geometry, stability, dynamics and oracle layers."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .dynamics import TimeSeriesRecord


class VortexPatchError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(VortexPatchError, ValueError):
    """Raised when an input violates a structural invariant (loops, markers)."""


class DomainError(VortexPatchError, ValueError):
    """Raised when an input is outside an operation's mathematical domain."""


class ConfigError(VortexPatchError, ValueError):
    """Raised when a scenario file cannot be parsed."""


class StepRejectedError(VortexPatchError, RuntimeError):
    """Raised when a time step leaves the boundary tangled or collapsed."""


class EvolutionAbortedError(VortexPatchError, RuntimeError):
    """Raised when step rejections cascade; keeps the series produced so far."""

    def __init__(self, reason: str, records: list[TimeSeriesRecord]) -> None:
        super().__init__(reason)
        self.reason = reason
        self.records = records
