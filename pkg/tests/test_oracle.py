from __future__ import annotations

import math

import numpy as np
import pytest

from vortexpatch.errors import DomainError
from vortexpatch.fixtures import circle, equality_case_region, random_star_polygon, square
from vortexpatch.geometry import (
    ORIGIN,
    Disk,
    PatchRegion,
    Point,
    region_moments,
    sup_weight,
    symmetric_difference_area,
    translate,
)
from vortexpatch.oracle import (
    GridSpec,
    McConfig,
    grid_for,
    grid_moments,
    grid_q_additivity,
    grid_q_direct,
    grid_sup_weight,
    mc_symmetric_difference,
    rasterize,
)
from vortexpatch.stability import q_value


def _q_error_model(region: PatchRegion, disk: Disk, pitch: float) -> float:
    centre = disk.center
    recentred = translate(region, Point(-centre.x, -centre.y))
    weight = sup_weight(recentred, Disk(ORIGIN, disk.radius))
    return pitch * (region.perimeter * weight + 4.0 * math.pi * disk.radius**2 * pitch)


def test_grid_for_aligns_to_pitch_and_pads(unit_disk: Disk) -> None:
    grid = grid_for([square(1.0)], unit_disk, 0.005)

    assert grid.lower.x == pytest.approx(-1.01)
    assert grid.upper.y == pytest.approx(1.01)
    assert grid.shape == (404, 404)


def test_grid_spec_validation() -> None:
    with pytest.raises(DomainError, match="pitch"):
        GridSpec(0.0, Point(0.0, 0.0), Point(1.0, 1.0))
    with pytest.raises(DomainError, match="positive width"):
        GridSpec(0.1, Point(0.0, 0.0), Point(0.0, 1.0))


def test_grid_too_small_is_rejected() -> None:
    grid = GridSpec(0.01, Point(-1.0, -1.0), Point(1.0, 1.0))

    with pytest.raises(DomainError, match="does not cover"):
        grid_moments(square(1.0), grid)


def test_rasterised_square_is_exact_on_aligned_grid() -> None:
    region = square(1.0)
    grid = grid_for([region], None, 0.01)

    mask = rasterize(region, grid)
    moments = grid_moments(region, grid)

    assert int(mask.sum()) == 200 * 200
    assert moments.mass == pytest.approx(4.0, rel=1e-9)
    assert moments.angular == pytest.approx(8.0 / 3.0, rel=1e-4)


def test_rasterisation_respects_holes() -> None:
    region = equality_case_region(1.0, math.sqrt(0.5), 256)
    grid = grid_for([region], None, 0.01)

    moments = grid_moments(region, grid)

    assert moments.mass == pytest.approx(math.pi, abs=0.01 * region.perimeter)
    assert moments.angular == pytest.approx(0.75 * math.pi, abs=0.01 * region.perimeter)


def test_grid_moments_within_perimeter_bound(rng: np.random.Generator) -> None:
    for _ in range(10):
        region = random_star_polygon(rng, extent=2.0)
        exact = region_moments(region)
        for pitch in (0.02, 0.01):
            approx = grid_moments(region, grid_for([region], None, pitch))
            assert abs(approx.mass - exact.mass) <= pitch * region.perimeter


def test_grid_q_direct_matches_closed_forms(unit_disk: Disk) -> None:
    equality = equality_case_region(1.0, math.sqrt(0.5), 512)
    matched = circle(512, 1.0)
    pitch = 0.005

    q_equality = grid_q_direct(equality, unit_disk, grid_for([equality], unit_disk, pitch))
    q_matched = grid_q_direct(matched, unit_disk, grid_for([matched], unit_disk, pitch))

    assert q_equality == pytest.approx(math.pi / 4.0, rel=1e-2)
    assert q_matched < 1e-4


def test_grid_q_direct_tracks_moment_identity(rng: np.random.Generator) -> None:
    for _ in range(10):
        region = random_star_polygon(rng, extent=2.0)
        disk = Disk(Point(*rng.uniform(-1.0, 1.0, size=2)), float(rng.uniform(0.3, 1.5)))
        pitch = 0.01
        grid = grid_for([region], disk, pitch)

        error = abs(grid_q_direct(region, disk, grid) - q_value(region, disk).q)

        assert error <= 3.0 * _q_error_model(region, disk, pitch)


def test_q_additivity_on_square(unit_disk: Disk) -> None:
    region = square(1.0)
    grid = grid_for([region], unit_disk, 0.005)

    check = grid_q_additivity(region, unit_disk, grid)

    exact = 8.0 / 3.0 - 8.0 / math.pi + (math.pi - 4.0) ** 2 / (2 * math.pi)
    assert check.exact == pytest.approx(exact)
    assert check.lhs == pytest.approx(check.rhs, rel=1e-12)
    assert check.rhs == grid_q_direct(region, unit_disk, grid)
    assert abs(check.rhs - exact) <= 1e-3 * exact


def test_q_additivity_for_disjoint_region(unit_disk: Disk) -> None:
    region = square(0.5, Point(3.0, 0.0))
    grid = grid_for([region], unit_disk, 0.005)

    lhs, rhs, exact = grid_q_additivity(region, unit_disk, grid)

    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert abs(rhs - exact) <= 3.0 * _q_error_model(region, unit_disk, 0.005)


def test_q_additivity_holds_on_random_pairs_at_every_pitch(rng: np.random.Generator) -> None:
    pitches = (0.02, 0.01, 0.005)
    raster_error = np.zeros(len(pitches))

    for _ in range(10):
        region = random_star_polygon(rng, extent=2.0)
        disk = Disk(Point(*rng.uniform(-0.5, 0.5, size=2)), float(rng.uniform(0.3, 1.5)))
        for index, pitch in enumerate(pitches):
            check = grid_q_additivity(region, disk, grid_for([region], disk, pitch))
            assert abs(check.lhs - check.rhs) <= 1e-3 * check.rhs
            raster_error[index] += abs(check.rhs - check.exact)

    assert raster_error[2] < raster_error[0]


def test_grid_sup_weight_examples(unit_disk: Disk) -> None:
    pitch = 0.005

    def sup_on_grid(region: PatchRegion) -> float:
        return grid_sup_weight(region, unit_disk, grid_for([region], unit_disk, pitch))

    outer = circle(512, 1.2)

    assert sup_on_grid(square(0.5)) == pytest.approx(0.75, abs=4.0 * pitch)
    assert sup_on_grid(outer) == pytest.approx(sup_weight(outer, unit_disk), abs=6.0 * pitch)
    assert sup_on_grid(circle(512, 1.0)) < 4.0 * pitch


def test_monte_carlo_concentric_disks(unit_disk: Disk) -> None:
    region = circle(512, 1.2)

    estimate, stderr = mc_symmetric_difference(region, unit_disk, McConfig(100_000, 42))

    assert abs(estimate - 0.44 * math.pi) <= 3.0 * stderr


def test_monte_carlo_matched_disk_is_near_zero(unit_disk: Disk) -> None:
    estimate, stderr = mc_symmetric_difference(circle(1024, 1.0), unit_disk, McConfig(50_000, 1))

    assert estimate <= 3.0 * stderr


def test_monte_carlo_is_reproducible(unit_disk: Disk) -> None:
    region = square(1.0)

    first = mc_symmetric_difference(region, unit_disk, McConfig(10_000, 7))
    second = mc_symmetric_difference(region, unit_disk, McConfig(10_000, 7))

    assert first == second


def test_monte_carlo_campaign_against_exact_area() -> None:
    region = translate(square(0.8), Point(0.3, -0.2))
    disk = Disk(ORIGIN, 1.0)
    exact = symmetric_difference_area(region, disk)

    for seed in range(100):
        estimate, stderr = mc_symmetric_difference(region, disk, McConfig(20_000, seed))
        assert abs(estimate - exact) <= 4.0 * stderr


def test_monte_carlo_rejects_zero_samples() -> None:
    with pytest.raises(DomainError, match="positive sample count"):
        McConfig(0, 42)
