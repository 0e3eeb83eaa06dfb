"""Stability functionals for circular patches.

Q(A; B_r(x0)) is the weighted area of A △ B_r(x0) with weight
||x - x0|^2 - r^2|. It depends on A only through its conserved moments:

    Q = gap(A) + (pi r^2 - |A|)^2 / (2 pi) + |A| |x0 - M(A)/|A||^2

where gap(A) = i(A) - |A|^2/(2 pi) - |M(A)|^2/|A| >= 0 vanishes only on
disks. All functions below evaluate Q that way; the direct weighted-area
integral is left to :mod:`vortexpatch.oracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple

from .errors import DomainError
from .geometry import (
    EPS_NUM,
    ORIGIN,
    Disk,
    Moments,
    PatchRegion,
    polygon_disk_intersection_area,
    region_moments,
    regular_ngon,
    require_origin_disk,
    second_moment_tensor,
    sup_weight,
    symmetric_difference_area,
)

MIN_EQUALITY_RESOLUTION = 16


@dataclass(slots=True, frozen=True)
class QValue:
    q: float

    def __float__(self) -> float:
        return self.q


@dataclass(slots=True, frozen=True)
class StabilityReport:
    moments: Moments
    q: float
    lemma1_gap: float
    l1_distance: float
    lemma2_lhs: float
    lemma2_rhs: float
    margin: float

    @property
    def relative_margin(self) -> float:
        return self.margin / self.lemma2_rhs if self.lemma2_rhs > 0 else 0.0

    def to_payload(self) -> dict[str, Any]:
        return {
            "moments": self.moments.to_payload(),
            "q": self.q,
            "lemma1_gap": self.lemma1_gap,
            "l1_distance": self.l1_distance,
            "lemma2_lhs": self.lemma2_lhs,
            "lemma2_rhs": self.lemma2_rhs,
            "margin": self.margin,
        }


@dataclass(slots=True, frozen=True)
class TheoremBound:
    sup_weight: float
    initial_l1: float
    bound: float
    q_initial: float
    q_upper: float

    def to_payload(self) -> dict[str, Any]:
        return {
            "sup_weight": self.sup_weight,
            "initial_l1": self.initial_l1,
            "bound": self.bound,
            "q_initial": self.q_initial,
            "q_upper": self.q_upper,
        }


class PrelimCheck(NamedTuple):
    lhs: float
    rhs: float


class SetSplitCheck(NamedTuple):
    """|A △ B|^2 against 2|A \\ B|^2 + 2|B \\ A|^2."""

    lhs: float
    rhs: float
    outer_excess: float
    inner_deficit: float


def q_value(source: PatchRegion | Moments, disk: Disk) -> QValue:
    moments = _moments(source)
    centroid = moments.centroid
    offset2 = (disk.center.x - centroid.x) ** 2 + (disk.center.y - centroid.y) ** 2
    mass_mismatch = disk.area - moments.mass
    q = _gap(source, moments) + mass_mismatch**2 / (2.0 * math.pi) + moments.mass * offset2
    return QValue(q)


def lemma1_gap(source: PatchRegion | Moments) -> float:
    """i(A) - |A|^2/(2 pi) - |M(A)|^2/|A|; nonnegative, zero only for disks."""

    return _gap(source, _moments(source))


def best_fit_disk(source: PatchRegion | Moments) -> Disk:
    """Disk with the same mass and centre of mass; the unique minimiser of Q(A; .)."""

    moments = _moments(source)
    return Disk(moments.centroid, math.sqrt(moments.mass / math.pi))


def lemma2_check(region: PatchRegion, disk: Disk) -> StabilityReport:
    require_origin_disk(disk)
    moments = region_moments(region)
    q = q_value(region, disk).q
    l1 = symmetric_difference_area(region, disk)
    lhs = l1 * l1
    rhs = 4.0 * math.pi * q
    return StabilityReport(
        moments=moments,
        q=q,
        lemma1_gap=_gap(region, moments),
        l1_distance=l1,
        lemma2_lhs=lhs,
        lemma2_rhs=rhs,
        margin=rhs - lhs,
    )


def prelim_check(source: PatchRegion | Moments, disk: Disk) -> PrelimCheck:
    """(|A| - pi r^2)^2 against 2 pi Q(A; B); equality only for origin-centred disks."""

    require_origin_disk(disk)
    moments = _moments(source)
    lhs = (moments.mass - disk.area) ** 2
    return PrelimCheck(lhs=lhs, rhs=2.0 * math.pi * q_value(moments, disk).q)


def set_split_check(region: PatchRegion, disk: Disk) -> SetSplitCheck:
    overlap = polygon_disk_intersection_area(region, disk)
    outer = max(region.area - overlap, 0.0)
    inner = max(disk.area - overlap, 0.0)
    return SetSplitCheck(
        lhs=(outer + inner) ** 2,
        rhs=2.0 * outer**2 + 2.0 * inner**2,
        outer_excess=outer,
        inner_deficit=inner,
    )


def equality_case_region(r: float, a: float, n: int) -> PatchRegion:
    """Polygonal B_a(0) ∪ (B_b(0) \\ B_r(0)) with r^2 - a^2 = b^2 - r^2.

    Three area-matched n-gons: the outer b-loop, the r-hole and the inner
    a-island. They are concentric scaled copies, so they never cross.
    """

    if not 0 < a < r:
        raise DomainError(f"Equality case needs 0 < a < r, got a={a}, r={r}")
    if n < MIN_EQUALITY_RESOLUTION:
        raise DomainError(f"Equality case needs n >= {MIN_EQUALITY_RESOLUTION}, got {n}")
    b = math.sqrt(2.0 * r * r - a * a)
    outer, hole, island = (
        regular_ngon(n, Disk(ORIGIN, radius), area_matched=True).loops[0]
        for radius in (b, r, a)
    )
    return PatchRegion((outer, hole.reversed(), island))


def theorem_bound(initial: PatchRegion, disk: Disk) -> TheoremBound:
    """4 pi sup_{Ω0 △ B} ||x|^2 - r^2| |Ω0 △ B|, the time-uniform bound on |Ωt △ B|^2."""

    require_origin_disk(disk)
    weight = sup_weight(initial, disk)
    l1 = symmetric_difference_area(initial, disk)
    return TheoremBound(
        sup_weight=weight,
        initial_l1=l1,
        bound=4.0 * math.pi * weight * l1,
        q_initial=q_value(initial, disk).q,
        q_upper=weight * l1,
    )


def discretization_slack(n: int, radius: float) -> float:
    """Area of the annulus that traps an area-matched n-gon of ``radius``.

    Used as the per-fixture slack when a polygon stands in for a disk.
    """

    if n < 3:
        raise DomainError(f"A polygon needs n >= 3 vertices, got {n}")
    stretch = math.sqrt(2.0 * math.pi / (n * math.sin(2.0 * math.pi / n)))
    circumradius = radius * stretch
    return math.pi * circumradius**2 * math.sin(math.pi / n) ** 2


def inequality_holds(lhs: float, rhs: float, tolerance: float = EPS_NUM) -> bool:
    """lhs <= rhs up to a slack relative to the larger side."""

    return lhs <= rhs + tolerance * max(abs(lhs), abs(rhs))


def _moments(source: PatchRegion | Moments) -> Moments:
    moments = source if isinstance(source, Moments) else region_moments(source)
    if moments.mass <= 0:
        raise DomainError("Stability functionals need a region of positive mass")
    return moments


def _gap(source: PatchRegion | Moments, moments: Moments) -> float:
    if isinstance(source, PatchRegion):
        ixx, _, iyy = second_moment_tensor(source)
        centred = ixx + iyy
    else:
        centred = moments.angular - moments.momentum_norm2 / moments.mass
    return centred - moments.mass**2 / (2.0 * math.pi)
