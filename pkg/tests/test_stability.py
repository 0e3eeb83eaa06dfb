from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexpatch.errors import DomainError
from vortexpatch.fixtures import (
    circle,
    ellipse,
    random_simple_polygon,
    random_star_polygon,
    square,
)
from vortexpatch.geometry import (
    ORIGIN,
    Disk,
    Moments,
    PatchRegion,
    Point,
    disk_moments,
    region_moments,
    scale,
    symmetric_difference_area,
    translate,
)
from vortexpatch.stability import (
    best_fit_disk,
    discretization_slack,
    equality_case_region,
    inequality_holds,
    lemma1_gap,
    lemma2_check,
    prelim_check,
    q_value,
    set_split_check,
    theorem_bound,
)

HALF = math.sqrt(0.5)
KITE = PatchRegion.from_loops([[[0.0, 0.0], [3.0, 0.0], [1.0, 2.0], [0.5, 1.0]]])


def _mass_matched(region: PatchRegion) -> Disk:
    return Disk(ORIGIN, math.sqrt(region.area / math.pi))


def test_square_gap_and_best_fit_disk() -> None:
    region = square(1.0)

    assert lemma1_gap(region) == pytest.approx(8.0 / 3.0 - 8.0 / math.pi, rel=1e-12)
    fit = best_fit_disk(region)
    assert fit.radius == pytest.approx(2.0 / math.sqrt(math.pi))
    assert (fit.center.x, fit.center.y) == pytest.approx((0.0, 0.0), abs=1e-14)
    assert q_value(region, fit).q == pytest.approx(lemma1_gap(region), rel=1e-12)


def test_q_for_offset_disk_moments() -> None:
    moments = disk_moments(Disk(Point(3.0, 4.0), 1.0))

    assert q_value(moments, Disk(ORIGIN, 1.0)).q == pytest.approx(25.0 * math.pi, rel=1e-12)
    assert lemma1_gap(moments) == pytest.approx(0.0, abs=1e-12)


def test_q_rejects_zero_mass() -> None:
    with pytest.raises(DomainError, match="positive mass"):
        q_value(Moments(0.0, (0.0, 0.0), 0.0), Disk(ORIGIN, 1.0))


def test_ellipse_gap_matches_closed_form() -> None:
    region = ellipse(1024, 2.0, 1.0, Point(-1.0, 5.0))

    assert lemma1_gap(region) == pytest.approx(math.pi / 2.0, rel=1e-3)


def test_gap_of_ngons_decreases_with_resolution() -> None:
    target = Disk(Point(3.0, 4.0), 1.0)
    gaps = [lemma1_gap(circle(n, 1.0, target.center)) for n in (16, 32, 64, 128, 256, 512, 1024)]

    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:], strict=False))
    assert 0.0 <= gaps[-1] < 1e-4


def test_equality_case_moments_and_q() -> None:
    region = equality_case_region(1.0, HALF, 4096)
    moments = region_moments(region)

    assert moments.mass == pytest.approx(math.pi, rel=1e-12)
    assert moments.momentum == pytest.approx((0.0, 0.0), abs=1e-10)
    assert moments.angular == pytest.approx(0.75 * math.pi, rel=1e-5)
    assert q_value(region, Disk(ORIGIN, 1.0)).q == pytest.approx(math.pi / 4.0, rel=1e-4)


def test_equality_case_is_sharp_for_lemma2() -> None:
    disk = Disk(ORIGIN, 1.0)
    coarse = lemma2_check(equality_case_region(1.0, HALF, 1024), disk)
    fine = lemma2_check(equality_case_region(1.0, HALF, 4096), disk)

    assert fine.lemma2_lhs == pytest.approx(math.pi**2, rel=1e-3)
    assert fine.lemma2_rhs == pytest.approx(math.pi**2, rel=1e-3)
    assert -1e-9 <= fine.relative_margin < 1e-3
    assert fine.relative_margin < coarse.relative_margin


def test_equality_case_rejects_bad_radii() -> None:
    with pytest.raises(DomainError):
        equality_case_region(1.0, 1.0, 64)
    with pytest.raises(DomainError):
        equality_case_region(1.0, 0.0, 64)
    with pytest.raises(DomainError, match="n >= 16"):
        equality_case_region(1.0, 0.5, 8)


def test_other_shapes_have_strictly_positive_margin() -> None:
    for region in (square(1.0), ellipse(512, 2.0, 1.0)):
        report = lemma2_check(region, _mass_matched(region))
        assert report.relative_margin > 1e-2


def test_lemma2_requires_origin_disk() -> None:
    with pytest.raises(DomainError, match="centred at the origin"):
        lemma2_check(square(1.0), Disk(Point(0.0, 1.0), 1.0))
    with pytest.raises(DomainError):
        prelim_check(square(1.0), Disk(Point(0.0, 1.0), 1.0))
    with pytest.raises(DomainError):
        theorem_bound(square(1.0), Disk(Point(0.0, 1.0), 1.0))


def test_prelim_for_square_and_origin_ngon() -> None:
    unit = Disk(ORIGIN, 1.0)
    lhs, rhs = prelim_check(square(1.0), unit)
    assert lhs == pytest.approx((4.0 - math.pi) ** 2)
    assert lhs <= rhs

    lhs, rhs = prelim_check(circle(1024, 1.0), Disk(ORIGIN, 1.3))
    assert lhs == pytest.approx(rhs, rel=1e-4)


def test_set_split_is_equality_for_mass_matched_disk() -> None:
    region = square(1.0)

    check = set_split_check(region, _mass_matched(region))

    assert check.outer_excess == pytest.approx(check.inner_deficit, rel=1e-9)
    assert check.lhs == pytest.approx(check.rhs, rel=1e-9)
    unequal = set_split_check(region, Disk(ORIGIN, 0.5))
    assert unequal.lhs < unequal.rhs


def test_concentric_theorem_bound() -> None:
    initial = circle(512, 1.2)
    bound = theorem_bound(initial, Disk(ORIGIN, 1.0))

    assert bound.initial_l1 == pytest.approx(0.44 * math.pi, rel=1e-12)
    assert bound.bound == pytest.approx(4.0 * math.pi**2 * 0.44**2, rel=1e-3)
    assert bound.q_initial <= bound.q_upper
    l1 = symmetric_difference_area(initial, Disk(ORIGIN, 1.0))
    assert l1 * l1 <= bound.bound


def test_bound_vanishes_on_the_disk_itself() -> None:
    region = circle(2048, 1.0)

    bound = theorem_bound(region, Disk(ORIGIN, 1.0))

    assert bound.bound < 1e-6


def test_discretization_slack_shrinks_with_resolution() -> None:
    slacks = [discretization_slack(n, 1.0) for n in (64, 128, 256)]

    assert slacks[0] > slacks[1] > slacks[2] > 0.0
    assert slacks[1] == pytest.approx(slacks[0] / 4.0, rel=1e-2)


def test_inequality_holds_uses_relative_slack() -> None:
    assert inequality_holds(1.0 + 1e-12, 1.0)
    assert not inequality_holds(1.0 + 1e-6, 1.0)
    assert inequality_holds(1.05, 1.0, tolerance=0.1)


def test_random_polygon_campaign(rng: np.random.Generator) -> None:
    for draw in range(1000):
        region = random_star_polygon(rng) if draw % 2 == 0 else random_simple_polygon(rng)
        moments = region_moments(region)
        assert lemma1_gap(region) >= -1e-9 * moments.angular

        centroid = moments.centroid
        centred = translate(region, Point(-centroid.x, -centroid.y))
        disk = Disk(ORIGIN, best_fit_disk(centred).radius)
        report = lemma2_check(centred, disk)
        assert report.margin >= -1e-9 * report.lemma2_rhs

        radius = float(rng.uniform(0.1, 10.0))
        lhs, rhs = prelim_check(region, Disk(ORIGIN, radius))
        assert inequality_holds(lhs, rhs)


@settings(max_examples=100, deadline=None)
@given(
    cx=st.floats(-5.0, 5.0),
    cy=st.floats(-5.0, 5.0),
    radius=st.floats(0.1, 5.0),
)
def test_best_fit_disk_minimises_q(cx: float, cy: float, radius: float) -> None:
    fit = best_fit_disk(KITE)

    assert q_value(KITE, fit).q <= q_value(KITE, Disk(Point(cx, cy), radius)).q + 1e-12


@settings(max_examples=50, deadline=None)
@given(
    cx=st.floats(-5.0, 5.0),
    cy=st.floats(-5.0, 5.0),
    radius=st.floats(0.1, 5.0),
)
def test_q_decomposes_into_moment_terms(cx: float, cy: float, radius: float) -> None:
    moments = region_moments(KITE)
    disk = Disk(Point(cx, cy), radius)
    centroid = moments.centroid
    offset2 = (cx - centroid.x) ** 2 + (cy - centroid.y) ** 2

    expected = (
        lemma1_gap(KITE)
        + (math.pi * radius**2 - moments.mass) ** 2 / (2.0 * math.pi)
        + moments.mass * offset2
    )

    assert q_value(KITE, disk).q == pytest.approx(expected, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(factor=st.floats(0.2, 5.0))
def test_lemma2_scales_with_fourth_power(factor: float) -> None:
    region = square(1.0)
    base = lemma2_check(region, Disk(ORIGIN, 1.0))

    scaled = lemma2_check(scale(region, factor), Disk(ORIGIN, factor))

    assert scaled.q == pytest.approx(base.q * factor**4, rel=1e-9)
    assert scaled.lemma2_lhs == pytest.approx(base.lemma2_lhs * factor**4, rel=1e-9)
    assert scaled.margin > 0.0
