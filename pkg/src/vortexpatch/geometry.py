"""Exact geometry for polygonal patch regions and analytic disks.

Regions are unions of piecewise-linear loops; disks stay analytic. Every
functional here is computed from closed-form per-edge integrals (Green's
theorem), so results are exact up to floating-point rounding.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import shapely
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError, DomainError, ValidationError

EPS_GEOM = 1e-9
EPS_NUM = 1e-9

FloatArray = NDArray[np.float64]

_WINDING_CHUNK = 2_000_000


@dataclass(slots=True, frozen=True)
class Point:
    x: float
    y: float

    def as_array(self) -> FloatArray:
        return np.array([self.x, self.y], dtype=np.float64)

    @property
    def norm2(self) -> float:
        return self.x * self.x + self.y * self.y


ORIGIN = Point(0.0, 0.0)


@dataclass(slots=True, frozen=True, eq=False)
class Loop:
    """Closed polygonal boundary; counterclockwise loops enclose positive area."""

    vertices: FloatArray

    @classmethod
    def from_points(cls, points: ArrayLike) -> Loop:
        vertices = np.array(points, dtype=np.float64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValidationError("Loop vertices must be a sequence of (x, y) pairs")
        if not np.all(np.isfinite(vertices)):
            raise ValidationError("Loop vertices must be finite")
        if len(vertices) > 3 and np.hypot(*(vertices[-1] - vertices[0])) <= EPS_GEOM:
            vertices = vertices[:-1]
        if len(vertices) < 3:
            raise ValidationError(f"Loop needs at least 3 vertices, got {len(vertices)}")

        spacing = np.hypot(*(np.roll(vertices, -1, axis=0) - vertices).T)
        if np.any(spacing <= EPS_GEOM):
            index = int(np.argmin(spacing))
            raise ValidationError(f"Loop has coincident consecutive vertices at index {index}")

        loop = cls(vertices)
        if abs(loop.signed_area) <= EPS_GEOM**2:
            raise ValidationError("Loop encloses zero area")
        if not shapely.LinearRing(vertices).is_simple:
            raise ValidationError("Loop is self-intersecting")
        vertices.setflags(write=False)
        return loop

    @property
    def signed_area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * math.fsum((x * np.roll(y, -1) - np.roll(x, -1) * y).tolist())

    @property
    def is_counterclockwise(self) -> bool:
        return self.signed_area > 0

    def __len__(self) -> int:
        return len(self.vertices)

    def reversed(self) -> Loop:
        return Loop(self.vertices[::-1].copy())

    def edges(self) -> tuple[FloatArray, FloatArray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def ring(self) -> shapely.LinearRing:
        return shapely.LinearRing(self.vertices)


@dataclass(slots=True, frozen=True, eq=False)
class PatchRegion:
    """Bounded open set: outer loops counterclockwise, holes clockwise."""

    loops: tuple[Loop, ...]

    @classmethod
    def from_loops(
        cls,
        loops: Iterable[ArrayLike | Loop],
        *,
        normalize: bool = True,
    ) -> PatchRegion:
        """Validate loops and orient them by nesting depth.

        A loop nested inside an even number of other loops is an outer
        boundary, otherwise a hole. With ``normalize`` disabled the given
        orientation must already match.
        """

        built = [
            Loop.from_points(item.vertices if isinstance(item, Loop) else item) for item in loops
        ]
        if not built:
            raise ValidationError("Region needs at least one loop")

        rings = [loop.ring() for loop in built]
        for i in range(len(rings)):
            for j in range(i + 1, len(rings)):
                if rings[i].intersects(rings[j]):
                    raise ValidationError(f"Loops {i} and {j} cross or touch")

        oriented: list[Loop] = []
        for i, loop in enumerate(built):
            anchor = loop.vertices[:1]
            depth = sum(
                1
                for j, other in enumerate(built)
                if j != i and _winding_numbers(anchor, *other.edges())[0] != 0
            )
            outer = depth % 2 == 0
            if outer != loop.is_counterclockwise:
                if not normalize:
                    kind = "outer" if outer else "hole"
                    raise ValidationError(f"Loop {i} is a {kind} loop with the wrong orientation")
                loop = loop.reversed()
            oriented.append(loop)

        region = cls(tuple(oriented))
        if region.area <= EPS_GEOM**2:
            raise ValidationError("Region has non-positive total area")
        return region

    @property
    def area(self) -> float:
        return math.fsum(loop.signed_area for loop in self.loops)

    @property
    def vertex_count(self) -> int:
        return sum(len(loop) for loop in self.loops)

    @property
    def perimeter(self) -> float:
        a, b = self.edges()
        return math.fsum(np.hypot(*(b - a).T).tolist())

    def edges(self) -> tuple[FloatArray, FloatArray]:
        starts, ends = zip(*(loop.edges() for loop in self.loops), strict=True)
        return np.concatenate(starts), np.concatenate(ends)

    def bounds(self) -> tuple[Point, Point]:
        stacked = np.concatenate([loop.vertices for loop in self.loops])
        lo, hi = stacked.min(axis=0), stacked.max(axis=0)
        return Point(float(lo[0]), float(lo[1])), Point(float(hi[0]), float(hi[1]))

    def winding_numbers(self, points: ArrayLike) -> NDArray[np.int64]:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return _winding_numbers(pts, *self.edges())

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        return self.winding_numbers(points) != 0

    def to_payload(self) -> dict[str, Any]:
        return {"loops": [loop.vertices.tolist() for loop in self.loops]}


@dataclass(slots=True, frozen=True)
class Disk:
    center: Point
    radius: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.radius) or self.radius <= 0:
            raise DomainError(f"Disk radius must be positive, got {self.radius}")
        if not (math.isfinite(self.center.x) and math.isfinite(self.center.y)):
            raise DomainError("Disk center must be finite")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def is_origin_centered(self) -> bool:
        return abs(self.center.x) <= EPS_GEOM and abs(self.center.y) <= EPS_GEOM

    def to_payload(self) -> dict[str, Any]:
        return {"center": [self.center.x, self.center.y], "radius": self.radius}


@dataclass(slots=True, frozen=True)
class Moments:
    """Mass, momentum (first moment) and angular momentum (second moment of |x|^2)."""

    mass: float
    momentum: tuple[float, float]
    angular: float

    @property
    def centroid(self) -> Point:
        if self.mass <= 0:
            raise DomainError("Centroid of a zero-mass set is undefined")
        return Point(self.momentum[0] / self.mass, self.momentum[1] / self.mass)

    @property
    def momentum_norm2(self) -> float:
        mx, my = self.momentum
        return mx * mx + my * my

    def to_payload(self) -> dict[str, Any]:
        return {"mass": self.mass, "momentum": list(self.momentum), "angular": self.angular}


def region_moments(region: PatchRegion) -> Moments:
    """Exact (|A|, M(A), i(A)) by per-edge Green's-theorem closed forms."""

    ref, mass, mx, my, ixx, _, iyy = _local_moments(region)
    if mass <= 0:
        raise ValidationError("Region has non-positive area")
    cx, cy = ref
    momentum = (mx + cx * mass, my + cy * mass)
    angular = ixx + iyy + 2.0 * (cx * mx + cy * my) + (cx * cx + cy * cy) * mass
    return Moments(mass=mass, momentum=momentum, angular=angular)


def second_moment_tensor(region: PatchRegion) -> tuple[float, float, float]:
    """Centred second moments (Ixx, Ixy, Iyy) about the region's centroid."""

    _, mass, mx, my, ixx, ixy, iyy = _local_moments(region)
    gx, gy = mx / mass, my / mass
    return ixx - mass * gx * gx, ixy - mass * gx * gy, iyy - mass * gy * gy


def disk_moments(disk: Disk) -> Moments:
    mass = disk.area
    x0, y0 = disk.center.x, disk.center.y
    return Moments(
        mass=mass,
        momentum=(mass * x0, mass * y0),
        angular=0.5 * math.pi * disk.radius**4 + mass * disk.center.norm2,
    )


def polygon_disk_intersection_area(region: PatchRegion, disk: Disk) -> float:
    """Exact |A ∩ B| by clipping each edge against the circle.

    Edge portions inside the disk contribute triangle (shoelace) terms about
    the disk center; portions outside are replaced by circular sectors.
    """

    a, b = region.edges()
    center = disk.center.as_array()
    terms = _clipped_edge_areas(a - center, b - center, disk.radius)
    area = math.fsum(terms.tolist())
    return min(max(area, 0.0), region.area, disk.area)


def symmetric_difference_area(region: PatchRegion, disk: Disk) -> float:
    """|A △ B| = |A| + |B| - 2|A ∩ B| (the L1 distance of the indicators)."""

    overlap = polygon_disk_intersection_area(region, disk)
    return max(region.area + disk.area - 2.0 * overlap, 0.0)


def sup_weight(region: PatchRegion, disk: Disk) -> float:
    """Exact sup of ||x|^2 - r^2| over the closure of A △ B for an origin disk.

    Every boundary point of A belongs to the closure of A △ B, so the
    candidates are the vertices, the feet of perpendiculars from the origin
    onto edges, and the origin itself when it lies outside A.
    """

    require_origin_disk(disk)
    r2 = disk.radius**2
    a, b = region.edges()

    values = [np.abs(np.einsum("ij,ij->i", a, a) - r2)]
    d = b - a
    length2 = np.einsum("ij,ij->i", d, d)
    t = -np.einsum("ij,ij->i", a, d) / length2
    inside = (t > 0.0) & (t < 1.0)
    feet = a[inside] + t[inside, None] * d[inside]
    values.append(np.abs(np.einsum("ij,ij->i", feet, feet) - r2))
    if not region.contains([[0.0, 0.0]])[0]:
        values.append(np.array([r2]))
    return float(max(v.max(initial=0.0) for v in values))


def regular_ngon(n: int, target: Disk, *, area_matched: bool = False) -> PatchRegion:
    """Regular n-gon centred on ``target``; inscribed or scaled to area pi r^2."""

    if n < 3:
        raise DomainError(f"A polygon needs n >= 3 vertices, got {n}")
    circumradius = target.radius
    if area_matched:
        circumradius *= math.sqrt(2.0 * math.pi / (n * math.sin(2.0 * math.pi / n)))
    theta = 2.0 * math.pi * np.arange(n) / n
    vertices = np.column_stack(
        (
            target.center.x + circumradius * np.cos(theta),
            target.center.y + circumradius * np.sin(theta),
        )
    )
    return PatchRegion((Loop(vertices),))


def translate(region: PatchRegion, offset: Point) -> PatchRegion:
    shift = offset.as_array()
    return PatchRegion(tuple(Loop(loop.vertices + shift) for loop in region.loops))


def rotate(region: PatchRegion, angle: float) -> PatchRegion:
    """Rotate about the origin."""

    c, s = math.cos(angle), math.sin(angle)
    matrix = np.array([[c, s], [-s, c]])
    return PatchRegion(tuple(Loop(loop.vertices @ matrix) for loop in region.loops))


def scale(region: PatchRegion, factor: float) -> PatchRegion:
    if factor <= 0:
        raise DomainError(f"Scale factor must be positive, got {factor}")
    return PatchRegion(tuple(Loop(loop.vertices * factor) for loop in region.loops))


def region_from_payload(payload: Any) -> PatchRegion:
    if not isinstance(payload, dict) or set(payload) != {"loops"}:
        raise ConfigError("Region document must be an object with a single 'loops' key")
    loops = payload["loops"]
    if not isinstance(loops, list) or not loops:
        raise ConfigError("Field 'loops' must be a non-empty list")
    parsed: list[FloatArray] = []
    for index, raw in enumerate(loops):
        if not isinstance(raw, list) or not all(_is_pair(item) for item in raw):
            raise ConfigError(f"Field 'loops[{index}]' must be a list of [x, y] pairs")
        parsed.append(np.array(raw, dtype=np.float64).reshape(-1, 2))
    return PatchRegion.from_loops(parsed)


def load_region(path: Path) -> PatchRegion:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Unable to read region file {path}: {exc}") from exc
    return region_from_payload(payload)


def dump_region(region: PatchRegion) -> str:
    return json.dumps(region.to_payload())


def _is_pair(item: Any) -> bool:
    return (
        isinstance(item, list)
        and len(item) == 2
        and all(isinstance(v, int | float) and not isinstance(v, bool) for v in item)
    )


def require_origin_disk(disk: Disk) -> None:
    if not disk.is_origin_centered:
        raise DomainError(
            f"Disk must be centred at the origin, got ({disk.center.x}, {disk.center.y})"
        )


_LocalMoments = tuple[tuple[float, float], float, float, float, float, float, float]


def _local_moments(region: PatchRegion) -> _LocalMoments:
    # moments about the vertex mean, which keeps the shoelace sums well conditioned
    a, b = region.edges()
    ref = a.mean(axis=0)
    p, q = a - ref, b - ref
    px, py = p.T
    qx, qy = q.T
    cross = px * qy - qx * py

    def total(values: FloatArray) -> float:
        return math.fsum(values.tolist())

    mass = total(cross) / 2.0
    mx = total((px + qx) * cross) / 6.0
    my = total((py + qy) * cross) / 6.0
    ixx = total((px * px + px * qx + qx * qx) * cross) / 12.0
    iyy = total((py * py + py * qy + qy * qy) * cross) / 12.0
    ixy = total((px * qy + 2.0 * px * py + 2.0 * qx * qy + qx * py) * cross) / 24.0
    return (float(ref[0]), float(ref[1])), mass, mx, my, ixx, ixy, iyy


def _clipped_edge_areas(p: FloatArray, q: FloatArray, radius: float) -> FloatArray:
    """Signed area of disk ∩ triangle(center, p, q) for every edge (center at origin)."""

    d = q - p
    length2 = np.einsum("ij,ij->i", d, d)
    cross_pd = p[:, 0] * d[:, 1] - p[:, 1] * d[:, 0]
    dot_pd = np.einsum("ij,ij->i", p, d)

    # tangent or missing lines are classified by signed distance to the center
    safe_length2 = np.where(length2 > 0.0, length2, 1.0)
    distance = np.abs(cross_pd) / np.sqrt(safe_length2)
    secant = (length2 > 0.0) & (distance < radius - EPS_GEOM)

    half_chord = np.sqrt(np.where(secant, radius**2 * length2 - cross_pd**2, 0.0))
    t1 = np.where(secant, np.clip((-dot_pd - half_chord) / safe_length2, 0.0, 1.0), 0.0)
    t2 = np.where(secant, np.clip((-dot_pd + half_chord) / safe_length2, 0.0, 1.0), 0.0)
    enter = p + t1[:, None] * d
    leave = p + t2[:, None] * d

    inner = 0.5 * (enter[:, 0] * leave[:, 1] - enter[:, 1] * leave[:, 0])
    return _sector(p, enter, radius) + inner + _sector(leave, q, radius)


def _sector(u: FloatArray, v: FloatArray, radius: float) -> FloatArray:
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = np.einsum("ij,ij->i", u, v)
    return 0.5 * radius**2 * np.arctan2(cross, dot)


def _winding_numbers(points: FloatArray, a: FloatArray, b: FloatArray) -> NDArray[np.int64]:
    """Winding number of each point with respect to the directed edges a -> b."""

    result = np.empty(len(points), dtype=np.int64)
    step = max(1, _WINDING_CHUNK // max(len(a), 1))
    ax, ay = a[:, 0], a[:, 1]
    bx, by = b[:, 0], b[:, 1]
    for start in range(0, len(points), step):
        chunk = points[start : start + step]
        px = chunk[:, 0:1]
        py = chunk[:, 1:2]
        side = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
        upward = (ay <= py) & (by > py) & (side > 0)
        downward = (ay > py) & (by <= py) & (side < 0)
        result[start : start + step] = upward.sum(axis=1) - downward.sum(axis=1)
    return result
