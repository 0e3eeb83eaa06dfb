"""Named region fixtures and seeded random polygons."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
import shapely

from .errors import DomainError, ValidationError
from .geometry import ORIGIN, Disk, Loop, PatchRegion, Point, regular_ngon, translate
from .stability import equality_case_region

DEFAULT_RESOLUTION = 512
MAX_DRAWS = 100


def circle(n: int, r: float, center: Point = ORIGIN) -> PatchRegion:
    """Area-matched regular n-gon standing in for the disk B_r(center)."""

    return regular_ngon(n, Disk(center, r), area_matched=True)


def ellipse(n: int, a: float, b: float, center: Point = ORIGIN) -> PatchRegion:
    """Polygonal ellipse with semi-axes (a, b) along x and y, area exactly pi*a*b."""

    if a <= 0 or b <= 0:
        raise DomainError(f"Ellipse semi-axes must be positive, got ({a}, {b})")
    if n < 3:
        raise DomainError(f"A polygon needs n >= 3 vertices, got {n}")
    stretch = math.sqrt(2.0 * math.pi / (n * math.sin(2.0 * math.pi / n)))
    theta = 2.0 * math.pi * np.arange(n) / n
    vertices = np.column_stack(
        (center.x + stretch * a * np.cos(theta), center.y + stretch * b * np.sin(theta))
    )
    return PatchRegion((Loop(vertices),))


def square(s: float, center: Point = ORIGIN) -> PatchRegion:
    """Axis-aligned square with corners (±s, ±s) about ``center``."""

    if s <= 0:
        raise DomainError(f"Square half-side must be positive, got {s}")
    corners = np.array([[-s, -s], [s, -s], [s, s], [-s, s]], dtype=np.float64)
    return PatchRegion((Loop(corners + center.as_array()),))


def perturbed_circle(
    n: int,
    r: float,
    k: int,
    amplitude: float,
    center: Point = ORIGIN,
) -> PatchRegion:
    """Circle with radial perturbation R(theta) = r (1 + amplitude cos(k theta))."""

    if n < 3:
        raise DomainError(f"A polygon needs n >= 3 vertices, got {n}")
    if r <= 0:
        raise DomainError(f"Radius must be positive, got {r}")
    if not abs(amplitude) < 1:
        raise DomainError(f"Perturbation amplitude must satisfy |amplitude| < 1, got {amplitude}")
    theta = 2.0 * math.pi * np.arange(n) / n
    radius = r * (1.0 + amplitude * np.cos(k * theta))
    vertices = np.column_stack(
        (center.x + radius * np.cos(theta), center.y + radius * np.sin(theta))
    )
    return PatchRegion((Loop(vertices),))


def random_star_polygon(
    rng: np.random.Generator,
    *,
    min_vertices: int = 5,
    max_vertices: int = 200,
    extent: float = 10.0,
) -> PatchRegion:
    """Random simple polygon, star-shaped about a random kernel point.

    Every vertex lies inside the square [-extent, extent]^2. Consecutive
    angles about the kernel stay less than pi apart, so the kernel sees
    every edge.
    """

    count = int(rng.integers(min_vertices, max_vertices + 1))
    kernel = rng.uniform(-0.5 * extent, 0.5 * extent, size=2)
    reach = 0.5 * extent
    while True:
        steps = rng.uniform(0.1, 1.0, size=count)
        gaps = 2.0 * math.pi * steps / steps.sum()
        if gaps.max() < math.pi:
            break
    angles = rng.uniform(0.0, 2.0 * math.pi) + np.cumsum(gaps)
    radii = rng.uniform(0.05 * reach, reach, size=count)
    vertices = kernel + np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    return PatchRegion.from_loops([vertices])


def random_simple_polygon(
    rng: np.random.Generator,
    *,
    min_vertices: int = 5,
    max_vertices: int = 200,
    extent: float = 10.0,
    concavity: float = 0.3,
) -> PatchRegion:
    """Random simple polygon, not necessarily star-shaped.

    The boundary is the concave hull of a uniform point cloud in
    [-extent, extent]^2; draws whose hull has fewer than ``min_vertices``
    corners or fails validation are redrawn.
    """

    for _ in range(MAX_DRAWS):
        count = int(rng.integers(min_vertices, max_vertices + 1))
        cloud = shapely.MultiPoint(rng.uniform(-extent, extent, size=(count, 2)))
        hull = shapely.concave_hull(cloud, ratio=concavity)
        if not isinstance(hull, shapely.Polygon) or hull.is_empty:
            continue
        vertices = np.asarray(hull.exterior.coords)[:-1]
        if len(vertices) < min_vertices:
            continue
        try:
            return PatchRegion.from_loops([vertices])
        except ValidationError:
            continue
    raise DomainError(f"No valid simple polygon after {MAX_DRAWS} draws")


@dataclass(slots=True, frozen=True)
class FixtureSpec:
    builder: Callable[..., PatchRegion]
    integer_params: frozenset[str]
    float_params: frozenset[str]
    defaults: Mapping[str, Any]

    @property
    def params(self) -> frozenset[str]:
        return self.integer_params | self.float_params

    @property
    def required(self) -> frozenset[str]:
        return self.params - frozenset(self.defaults)


FIXTURES: dict[str, FixtureSpec] = {
    "circle": FixtureSpec(
        builder=circle,
        integer_params=frozenset({"n"}),
        float_params=frozenset({"r"}),
        defaults={"n": DEFAULT_RESOLUTION},
    ),
    "ellipse": FixtureSpec(
        builder=ellipse,
        integer_params=frozenset({"n"}),
        float_params=frozenset({"a", "b"}),
        defaults={"n": DEFAULT_RESOLUTION},
    ),
    "square": FixtureSpec(
        builder=square,
        integer_params=frozenset(),
        float_params=frozenset({"s"}),
        defaults={},
    ),
    "equality_case": FixtureSpec(
        builder=lambda r, a, n, center=ORIGIN: translate(equality_case_region(r, a, n), center),
        integer_params=frozenset({"n"}),
        float_params=frozenset({"r", "a"}),
        defaults={"n": DEFAULT_RESOLUTION},
    ),
    "perturbed_circle": FixtureSpec(
        builder=perturbed_circle,
        integer_params=frozenset({"n", "k"}),
        float_params=frozenset({"r", "amplitude"}),
        defaults={"n": DEFAULT_RESOLUTION},
    ),
}


def build_fixture(name: str, params: Mapping[str, Any], center: Point = ORIGIN) -> PatchRegion:
    try:
        spec = FIXTURES[name]
    except KeyError as exc:
        raise DomainError(f"Unknown fixture '{name}'") from exc
    arguments = {**spec.defaults, **params}
    return spec.builder(**arguments, center=center)
