"""vortexpatch: L1 stability of circular vortex patches, checked exactly and dynamically."""

from .dynamics import DiscretizedPatch, EvolutionParams, TimeSeriesRecord, evolve
from .errors import (
    ConfigError,
    DomainError,
    EvolutionAbortedError,
    StepRejectedError,
    ValidationError,
    VortexPatchError,
)
from .geometry import Disk, Loop, Moments, PatchRegion, Point, region_moments
from .stability import lemma1_gap, lemma2_check, q_value, theorem_bound

__all__ = [
    "ConfigError",
    "DiscretizedPatch",
    "Disk",
    "DomainError",
    "EvolutionAbortedError",
    "EvolutionParams",
    "Loop",
    "Moments",
    "PatchRegion",
    "Point",
    "StepRejectedError",
    "TimeSeriesRecord",
    "ValidationError",
    "VortexPatchError",
    "evolve",
    "lemma1_gap",
    "lemma2_check",
    "q_value",
    "region_moments",
    "theorem_bound",
]
