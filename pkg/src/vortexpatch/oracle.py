"""Brute-force verifiers for the exact geometry and stability functionals.

Grid oracles classify cell centres (no supersampling), so their error is
first order in the pitch: roughly ``pitch * perimeter`` for areas, with
matching factors for weighted integrals. The Monte Carlo oracle samples a
bounding box uniformly from a seeded generator.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import shapely
from numpy.typing import NDArray

from .errors import DomainError
from .geometry import EPS_GEOM, Disk, FloatArray, Moments, PatchRegion, Point
from .stability import q_value

GRID_PADDING = 2
MAX_SEED = 2**64 - 1

BoolGrid = NDArray[np.bool_]


@dataclass(slots=True, frozen=True)
class GridSpec:
    pitch: float
    lower: Point
    upper: Point

    def __post_init__(self) -> None:
        if not math.isfinite(self.pitch) or self.pitch <= 0:
            raise DomainError(f"Grid pitch must be positive, got {self.pitch}")
        if not (self.upper.x > self.lower.x and self.upper.y > self.lower.y):
            raise DomainError("Grid bounding box must have positive width and height")

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, columns) of cells covering the box."""

        rows = math.ceil((self.upper.y - self.lower.y) / self.pitch - EPS_GEOM)
        cols = math.ceil((self.upper.x - self.lower.x) / self.pitch - EPS_GEOM)
        return rows, cols

    @property
    def cell_area(self) -> float:
        return self.pitch * self.pitch

    def centres(self) -> tuple[FloatArray, FloatArray]:
        rows, cols = self.shape
        xs = self.lower.x + (np.arange(cols) + 0.5) * self.pitch
        ys = self.lower.y + (np.arange(rows) + 0.5) * self.pitch
        return xs, ys


@dataclass(slots=True, frozen=True)
class McConfig:
    samples: int
    seed: int

    def __post_init__(self) -> None:
        if self.samples <= 0:
            raise DomainError(f"Monte Carlo needs a positive sample count, got {self.samples}")
        if not 0 <= self.seed <= MAX_SEED:
            raise DomainError(f"Seed must be an unsigned 64-bit integer, got {self.seed}")


class AdditivityCheck(NamedTuple):
    """Q(A ∪ B; B) + Q(A ∩ B; B) against Q(A; B), both on the rasterised sets.

    ``exact`` is the closed-form Q(A; B) for reference.
    """

    lhs: float
    rhs: float
    exact: float


class McEstimate(NamedTuple):
    estimate: float
    stderr: float


def grid_for(regions: Iterable[PatchRegion], disk: Disk | None, pitch: float) -> GridSpec:
    """Smallest pitch-aligned box covering the inputs with ``GRID_PADDING`` spare cells.

    Edges lying on multiples of the pitch therefore fall on cell boundaries.
    """

    if not math.isfinite(pitch) or pitch <= 0:
        raise DomainError(f"Grid pitch must be positive, got {pitch}")
    lo, hi = _covering_box(regions, disk)
    lower = Point(
        (math.floor(lo.x / pitch) - GRID_PADDING) * pitch,
        (math.floor(lo.y / pitch) - GRID_PADDING) * pitch,
    )
    upper = Point(
        (math.ceil(hi.x / pitch) + GRID_PADDING) * pitch,
        (math.ceil(hi.y / pitch) + GRID_PADDING) * pitch,
    )
    return GridSpec(pitch, lower, upper)


def rasterize(region: PatchRegion, grid: GridSpec) -> BoolGrid:
    """Cell-centre membership by even-odd scanlines, shape ``grid.shape``."""

    _require_cover(grid, [region], None)
    rows, cols = grid.shape
    h = grid.pitch
    a, b = region.edges()
    ay, by = a[:, 1], b[:, 1]
    sloped = ay != by
    a, b = a[sloped], b[sloped]
    ay, by = ay[sloped], by[sloped]

    # rows whose centre y lies in [min(ay, by), max(ay, by))
    y_lo = np.minimum(ay, by)
    y_hi = np.maximum(ay, by)
    first = np.ceil((y_lo - grid.lower.y) / h - 0.5).astype(np.int64)
    stop = np.ceil((y_hi - grid.lower.y) / h - 0.5).astype(np.int64)
    counts = np.clip(stop - first, 0, None)

    edge = np.repeat(np.arange(len(a)), counts)
    offsets = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
    row = first[edge] + offsets
    y = grid.lower.y + (row + 0.5) * h
    ax, bx = a[edge, 0], b[edge, 0]
    x = ax + (y - ay[edge]) * (bx - ax) / (by[edge] - ay[edge])
    col = np.clip(np.ceil((x - grid.lower.x) / h - 0.5).astype(np.int64), 0, cols)

    toggles = np.zeros((rows, cols + 1), dtype=np.int64)
    np.add.at(toggles, (row, col), 1)
    return (np.cumsum(toggles, axis=1)[:, :cols] % 2).astype(bool)


def grid_moments(region: PatchRegion, grid: GridSpec) -> Moments:
    mask = rasterize(region, grid)
    xs, ys = grid.centres()
    gx, gy = np.meshgrid(xs, ys)
    area = grid.cell_area
    x, y = gx[mask], gy[mask]
    return Moments(
        mass=float(mask.sum()) * area,
        momentum=(float(x.sum()) * area, float(y.sum()) * area),
        angular=float((x * x + y * y).sum()) * area,
    )


def grid_q_direct(region: PatchRegion, disk: Disk, grid: GridSpec) -> float:
    """Weighted area of A △ B with weight ||x - x0|^2 - r^2|, summed over cell centres."""

    _require_cover(grid, [region], disk)
    return _grid_q(rasterize(region, grid), disk, grid)


def grid_q_additivity(region: PatchRegion, disk: Disk, grid: GridSpec) -> AdditivityCheck:
    _require_cover(grid, [region], disk)
    inside = rasterize(region, grid)
    in_disk = _disk_mask(disk, grid)
    lhs = _grid_q(inside | in_disk, disk, grid) + _grid_q(inside & in_disk, disk, grid)
    return AdditivityCheck(
        lhs=lhs, rhs=_grid_q(inside, disk, grid), exact=q_value(region, disk).q
    )


def grid_sup_weight(region: PatchRegion, disk: Disk, grid: GridSpec) -> float:
    """Largest ||x - x0|^2 - r^2| over cell centres in A △ B; 0 when none are."""

    _require_cover(grid, [region], disk)
    differ = rasterize(region, grid) ^ _disk_mask(disk, grid)
    if not differ.any():
        return 0.0
    return float(_weights(disk, grid)[differ].max())


def mc_symmetric_difference(region: PatchRegion, disk: Disk, config: McConfig) -> McEstimate:
    lo, hi = _covering_box([region], disk)
    box_area = (hi.x - lo.x) * (hi.y - lo.y)
    rng = np.random.default_rng(config.seed)
    points = rng.uniform((lo.x, lo.y), (hi.x, hi.y), size=(config.samples, 2))
    x, y = points[:, 0], points[:, 1]

    inside = np.zeros(config.samples, dtype=bool)
    for loop in region.loops:
        inside ^= shapely.contains_xy(shapely.Polygon(loop.vertices), x, y)
    in_disk = (x - disk.center.x) ** 2 + (y - disk.center.y) ** 2 < disk.radius**2

    fraction = float(np.count_nonzero(inside ^ in_disk)) / config.samples
    stderr = box_area * math.sqrt(fraction * (1.0 - fraction) / config.samples)
    return McEstimate(estimate=box_area * fraction, stderr=stderr)


def _grid_q(mask: BoolGrid, disk: Disk, grid: GridSpec) -> float:
    differ = mask ^ _disk_mask(disk, grid)
    return float(_weights(disk, grid)[differ].sum()) * grid.cell_area


def _disk_mask(disk: Disk, grid: GridSpec) -> BoolGrid:
    xs, ys = grid.centres()
    dx = xs[np.newaxis, :] - disk.center.x
    dy = ys[:, np.newaxis] - disk.center.y
    return dx * dx + dy * dy < disk.radius**2


def _weights(disk: Disk, grid: GridSpec) -> FloatArray:
    xs, ys = grid.centres()
    dx = xs[np.newaxis, :] - disk.center.x
    dy = ys[:, np.newaxis] - disk.center.y
    return np.abs(dx * dx + dy * dy - disk.radius**2)


def _covering_box(regions: Iterable[PatchRegion], disk: Disk | None) -> tuple[Point, Point]:
    corners: list[tuple[Point, Point]] = [region.bounds() for region in regions]
    if disk is not None:
        c, r = disk.center, disk.radius
        corners.append((Point(c.x - r, c.y - r), Point(c.x + r, c.y + r)))
    if not corners:
        raise DomainError("Nothing to cover: no regions and no disk given")
    return (
        Point(min(lo.x for lo, _ in corners), min(lo.y for lo, _ in corners)),
        Point(max(hi.x for _, hi in corners), max(hi.y for _, hi in corners)),
    )


def _require_cover(grid: GridSpec, regions: list[PatchRegion], disk: Disk | None) -> None:
    lo, hi = _covering_box(regions, disk)
    margin = GRID_PADDING * grid.pitch * (1.0 - 1e-6)
    if (
        lo.x - margin < grid.lower.x
        or lo.y - margin < grid.lower.y
        or hi.x + margin > grid.upper.x
        or hi.y + margin > grid.upper.y
    ):
        raise DomainError(
            f"Grid box [{grid.lower.x}, {grid.upper.x}] x [{grid.lower.y}, {grid.upper.y}] "
            f"does not cover the inputs padded by {GRID_PADDING} cells"
        )
