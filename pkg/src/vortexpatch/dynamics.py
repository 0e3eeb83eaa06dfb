"""Contour dynamics for unit-strength vortex patches.

The velocity induced by a patch of constant vorticity w bounded by the
oriented loops C is

    u(x) = -(w / 2 pi) * sum over C of  integral log|x - y| dy

For straight segments the integral has a closed form, so polygonal patches
are advected exactly up to time-stepping error. Markers move with the flow,
which realises the flow map and keeps the patch a sharp set.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import AbstractContextManager, nullcontext
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .errors import DomainError, EvolutionAbortedError, StepRejectedError, ValidationError
from .geometry import (
    EPS_GEOM,
    Disk,
    FloatArray,
    Moments,
    PatchRegion,
    Point,
    region_moments,
    require_origin_disk,
    second_moment_tensor,
    symmetric_difference_area,
)
from .logs import log_event
from .stability import TheoremBound, q_value, theorem_bound

UNIT_STRENGTH = 1.0
MIN_MARKERS = 16
Q_DRIFT_FLOOR = 1e-3
CSV_HEADER = ("t", "mass", "mx", "my", "i", "q", "l1", "bound", "margin")

# fixed partition of targets; results never depend on the worker count
_TARGET_BLOCK = 128

SampleCallback = Callable[[int, "DiscretizedPatch", "TimeSeriesRecord"], None]
StepCallback = Callable[[int, "DiscretizedPatch"], None]


@dataclass(slots=True, frozen=True, eq=False)
class DiscretizedPatch:
    """Marker loops of a patch at a given time; outer loops counterclockwise."""

    loops: tuple[FloatArray, ...]
    strength: float = UNIT_STRENGTH
    time: float = 0.0

    @classmethod
    def from_region(cls, region: PatchRegion, *, time: float = 0.0) -> DiscretizedPatch:
        patch = cls(tuple(loop.vertices.copy() for loop in region.loops), time=time)
        patch.validate()
        return patch

    def validate(self) -> None:
        if self.strength != UNIT_STRENGTH:
            raise DomainError(
                f"Only unit-strength patches are supported, got strength {self.strength}"
            )
        for index, loop in enumerate(self.loops):
            if len(loop) < MIN_MARKERS:
                raise ValidationError(
                    f"Loop {index} has {len(loop)} markers; at least {MIN_MARKERS} are required"
                )

    def to_region(self) -> PatchRegion:
        return PatchRegion.from_loops(self.loops, normalize=False)

    @property
    def marker_count(self) -> int:
        return sum(len(loop) for loop in self.loops)

    def markers(self) -> FloatArray:
        return np.concatenate(self.loops)

    def segments(self) -> tuple[FloatArray, FloatArray]:
        starts = np.concatenate(self.loops)
        ends = np.concatenate([np.roll(loop, -1, axis=0) for loop in self.loops])
        return starts, ends

    def with_markers(self, markers: FloatArray, time: float) -> DiscretizedPatch:
        cuts = np.cumsum([len(loop) for loop in self.loops])[:-1]
        return replace(self, loops=tuple(np.split(markers, cuts)), time=time)


@dataclass(slots=True, frozen=True)
class EvolutionParams:
    dt: float = 0.01
    t_end: float = 10.0
    s_min: float | None = None
    s_max: float | None = None
    output_stride: int = 10
    snapshot_stride: int = 0
    c_cfl: float = 0.5
    workers: int = 1
    max_rejections: int = 4

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise DomainError("evolution.dt must be > 0")
        if self.t_end < 0:
            raise DomainError("evolution.t_end must be >= 0")
        if self.output_stride < 1:
            raise DomainError("evolution.output_stride must be >= 1")
        if self.snapshot_stride < 0:
            raise DomainError("evolution.snapshot_stride must be >= 0")
        if not self.c_cfl > 0:
            raise DomainError("evolution.c_cfl must be > 0")
        if self.workers < 1:
            raise DomainError("evolution.workers must be >= 1")
        if self.max_rejections < 0:
            raise DomainError("evolution.max_rejections must be >= 0")
        s_min, s_max = self.s_min, self.s_max
        if s_min is not None and not s_min > 0:
            raise DomainError("evolution.s_min must be > 0")
        if s_min is not None and s_max is not None and not s_min < s_max:
            raise DomainError("evolution.s_min must be smaller than evolution.s_max")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def spacing_bounds(self, patch: DiscretizedPatch) -> tuple[float, float]:
        """Remesh bounds; unset values derive from the initial marker spacing."""

        spacing = np.concatenate([_spacing(loop) for loop in patch.loops])
        s_min = self.s_min if self.s_min is not None else 0.5 * float(spacing.min())
        s_max = self.s_max if self.s_max is not None else 2.0 * float(spacing.max())
        if not s_min < s_max:
            raise DomainError(f"Remesh bounds are inconsistent: s_min={s_min}, s_max={s_max}")
        return s_min, s_max


@dataclass(slots=True, frozen=True)
class TimeSeriesRecord:
    t: float
    moments: Moments
    q: float
    l1: float
    bound: float
    margin: float

    def values(self) -> tuple[float, ...]:
        mx, my = self.moments.momentum
        return (
            self.t,
            self.moments.mass,
            mx,
            my,
            self.moments.angular,
            self.q,
            self.l1,
            self.bound,
            self.margin,
        )

    def csv_row(self) -> list[str]:
        return [f"{value:.17g}" for value in self.values()]

    def to_payload(self) -> dict[str, float]:
        return dict(zip(CSV_HEADER, self.values(), strict=True))


@dataclass(slots=True, frozen=True)
class ConservationDrift:
    """Largest drift from the initial sample; momentum is absolute, the rest relative.

    Q is taken relative to max(Q0, Q_DRIFT_FLOOR * i0).
    """

    mass: float
    momentum: float
    angular: float
    q: float

    def worst(self) -> float:
        return max(self.mass, self.momentum, self.angular, self.q)

    def to_payload(self) -> dict[str, float]:
        return {"mass": self.mass, "momentum": self.momentum, "angular": self.angular, "q": self.q}


def boundary_velocity(patch: DiscretizedPatch, point: Point) -> tuple[float, float]:
    """Velocity induced at ``point`` by the patch."""

    starts, ends = patch.segments()
    target = np.array([[point.x, point.y]], dtype=np.float64)
    ux, uy = _induced_velocity(target, starts, ends, patch.strength)[0]
    return float(ux), float(uy)


def self_velocities(
    patch: DiscretizedPatch,
    *,
    workers: int = 1,
    executor: Executor | None = None,
) -> FloatArray:
    """Velocity at every marker, in marker order.

    Targets are evaluated in fixed blocks and each sum over segments uses
    the same compensated tree reduction, so results are bit-identical for
    any number of workers.
    """

    targets = patch.markers()
    starts, ends = patch.segments()
    blocks = [targets[i : i + _TARGET_BLOCK] for i in range(0, len(targets), _TARGET_BLOCK)]

    def evaluate(block: FloatArray) -> FloatArray:
        return _induced_velocity(block, starts, ends, patch.strength)

    if executor is None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.concatenate(list(pool.map(evaluate, blocks)))
    if executor is not None:
        return np.concatenate(list(executor.map(evaluate, blocks)))
    return np.concatenate([evaluate(block) for block in blocks])


def step_rk4(
    patch: DiscretizedPatch,
    dt: float,
    *,
    executor: Executor | None = None,
) -> DiscretizedPatch:
    """Classical four-stage Runge-Kutta update of every marker."""

    def velocity(markers: FloatArray) -> FloatArray:
        return self_velocities(patch.with_markers(markers, patch.time), executor=executor)

    x0 = patch.markers()
    k1 = velocity(x0)
    k2 = velocity(x0 + 0.5 * dt * k1)
    k3 = velocity(x0 + 0.5 * dt * k2)
    k4 = velocity(x0 + dt * k3)
    x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    advanced = patch.with_markers(x1, patch.time + dt)
    try:
        advanced.to_region()
    except ValidationError as exc:
        raise StepRejectedError(f"Step at t={patch.time} rejected: {exc}") from exc
    return advanced


def remesh(patch: DiscretizedPatch, s_min: float, s_max: float) -> DiscretizedPatch:
    """Insert markers on long segments and drop markers on short ones.

    New markers come from a cubic through the four neighbouring markers,
    parametrised by cumulative chord length.
    """

    if not 0 < s_min < s_max:
        raise DomainError(f"Remesh needs 0 < s_min < s_max, got {s_min}, {s_max}")
    loops = tuple(_remesh_loop(loop, s_min, s_max) for loop in patch.loops)
    if all(new is old for new, old in zip(loops, patch.loops, strict=True)):
        return patch
    return replace(patch, loops=loops)


def evolve(
    initial: DiscretizedPatch,
    disk: Disk,
    params: EvolutionParams,
    *,
    on_sample: SampleCallback | None = None,
    on_step: StepCallback | None = None,
) -> list[TimeSeriesRecord]:
    """Advance ``initial`` to ``params.t_end`` and sample the stability diagnostics.

    The time-uniform bound on l1^2 is fixed from the initial patch and every
    sample reports bound - l1^2 as its margin. ``on_sample`` sees every
    recorded sample, ``on_step`` every accepted step after remeshing.
    Repeated step rejection aborts the run with :class:`EvolutionAbortedError`,
    which carries the samples taken so far.
    """

    require_origin_disk(disk)
    initial.validate()
    region = initial.to_region()
    bound = theorem_bound(region, disk)
    s_min, s_max = params.spacing_bounds(initial)

    log_event(
        "evolve.start",
        markers=initial.marker_count,
        dt=params.dt,
        t_end=params.t_end,
        s_min=s_min,
        s_max=s_max,
        bound=bound.bound,
    )

    pool_context: AbstractContextManager[Executor | None] = (
        ThreadPoolExecutor(max_workers=params.workers) if params.workers > 1 else nullcontext()
    )
    with pool_context as pool:
        _check_cfl(initial, params, s_min, pool)
        records = [_sample(initial, region, disk, bound)]
        if on_sample is not None:
            on_sample(0, initial, records[0])

        patch = initial
        for step in range(1, params.steps + 1):
            try:
                patch = _advance(patch, params, pool)
            except StepRejectedError as exc:
                log_event("evolve.aborted", level=logging.ERROR, step=step, reason=str(exc))
                raise EvolutionAbortedError(str(exc), records) from exc
            patch = replace(remesh(patch, s_min, s_max), time=initial.time + step * params.dt)
            if on_step is not None:
                on_step(step, patch)

            if step % params.output_stride == 0 or step == params.steps:
                record = _sample(patch, patch.to_region(), disk, bound)
                records.append(record)
                log_event(
                    "evolve.sample",
                    level=logging.DEBUG,
                    step=step,
                    t=record.t,
                    markers=patch.marker_count,
                    margin=record.margin,
                )
                if on_sample is not None:
                    on_sample(step, patch, record)

    drift = conservation_drift(records)
    log_event(
        "evolve.finished",
        samples=len(records),
        markers=patch.marker_count,
        worst_margin=min(record.margin for record in records),
        **{f"drift_{name}": value for name, value in drift.to_payload().items()},
    )
    return records


def conservation_drift(records: Sequence[TimeSeriesRecord]) -> ConservationDrift:
    if not records:
        raise DomainError("Drift needs at least one record")
    first = records[0].moments
    q0 = records[0].q
    q_scale = max(abs(q0), Q_DRIFT_FLOOR * first.angular)
    mx0, my0 = first.momentum
    return ConservationDrift(
        mass=max(abs(r.moments.mass - first.mass) for r in records) / first.mass,
        momentum=max(
            math.hypot(r.moments.momentum[0] - mx0, r.moments.momentum[1] - my0) for r in records
        ),
        angular=max(abs(r.moments.angular - first.angular) for r in records) / first.angular,
        q=max(abs(r.q - q0) for r in records) / q_scale,
    )


def principal_axis_angle(region: PatchRegion) -> float:
    """Orientation of the major axis of inertia, in (-pi/2, pi/2]."""

    ixx, ixy, iyy = second_moment_tensor(region)
    return 0.5 * math.atan2(2.0 * ixy, ixx - iyy)


def rotation_rate(times: Sequence[float], angles: Sequence[float]) -> float:
    """Least-squares angular velocity of axis angles defined modulo pi."""

    unwrapped = 0.5 * np.unwrap(2.0 * np.asarray(angles, dtype=np.float64))
    slope, _ = np.polyfit(np.asarray(times, dtype=np.float64), unwrapped, 1)
    return float(slope)


def kirchhoff_rate(a: float, b: float, strength: float = UNIT_STRENGTH) -> float:
    """Angular velocity w a b / (a + b)^2 of the rigidly rotating elliptical patch."""

    return strength * a * b / (a + b) ** 2


def tree_sum(values: FloatArray) -> FloatArray:
    """Compensated pairwise sum over the last axis in a fixed order."""

    count = values.shape[-1]
    if count == 0:
        return np.zeros(values.shape[:-1])
    width = 1 << (count - 1).bit_length()
    padding = [(0, 0)] * (values.ndim - 1) + [(0, width - count)]
    total = np.pad(values, padding)
    error = np.zeros_like(total)
    while total.shape[-1] > 1:
        half = total.shape[-1] // 2
        left, right = total[..., :half], total[..., half:]
        summed = left + right
        virtual = summed - left
        lost = (left - (summed - virtual)) + (right - virtual)
        error = error[..., :half] + error[..., half:] + lost
        total = summed
    return total[..., 0] + error[..., 0]


def _induced_velocity(
    targets: FloatArray,
    starts: FloatArray,
    ends: FloatArray,
    strength: float,
) -> FloatArray:
    d = ends - starts
    length = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
    usable = length > 0.0
    safe_length = np.where(usable, length, 1.0)
    tx = np.where(usable, d[:, 0] / safe_length, 0.0)
    ty = np.where(usable, d[:, 1] / safe_length, 0.0)

    rx = targets[:, 0:1] - starts[:, 0]
    ry = targets[:, 1:2] - starts[:, 1]
    along = rx * tx + ry * ty
    offset = np.abs(rx * ty - ry * tx)
    integral = _log_antiderivative(length - along, offset) - _log_antiderivative(-along, offset)

    scale = -strength / (2.0 * math.pi)
    ux = tree_sum(integral * tx)
    uy = tree_sum(integral * ty)
    return scale * np.column_stack((ux, uy))


def _log_antiderivative(u: FloatArray, h: FloatArray) -> FloatArray:
    """Antiderivative in u of log sqrt(u^2 + h^2) for h >= 0; finite at u = h = 0."""

    r2 = u * u + h * h
    positive = r2 > 0.0
    log_term = np.where(positive, 0.5 * u * np.log(np.where(positive, r2, 1.0)), 0.0)
    return log_term - u + h * np.arctan2(u, h)


def _advance(
    patch: DiscretizedPatch,
    params: EvolutionParams,
    executor: Executor | None,
) -> DiscretizedPatch:
    substeps = 1
    while True:
        try:
            current = patch
            for _ in range(substeps):
                current = step_rk4(current, params.dt / substeps, executor=executor)
            return current
        except StepRejectedError as exc:
            log_event(
                "evolve.step_rejected",
                level=logging.WARNING,
                t=patch.time,
                substeps=substeps,
                reason=str(exc),
            )
            if substeps >= 1 << params.max_rejections:
                raise
            substeps *= 2


def _check_cfl(
    patch: DiscretizedPatch,
    params: EvolutionParams,
    s_min: float,
    executor: Executor | None,
) -> None:
    # spacing collapses at the rate adjacent markers separate; rigid motion is free
    velocities = self_velocities(patch, executor=executor)
    sizes = np.cumsum([0] + [len(loop) for loop in patch.loops])
    estimate = 0.0
    for lo, hi in zip(sizes[:-1], sizes[1:], strict=True):
        loop_velocity = velocities[lo:hi]
        relative = np.roll(loop_velocity, -1, axis=0) - loop_velocity
        estimate = max(estimate, float(np.hypot(*relative.T).max()))
    if estimate > 0.0 and params.dt > params.c_cfl * s_min / estimate:
        raise DomainError(
            f"evolution.dt={params.dt} exceeds the CFL bound "
            f"{params.c_cfl * s_min / estimate:.6g} (s_min={s_min:.6g}, u_max={estimate:.6g})"
        )


def _sample(
    patch: DiscretizedPatch,
    region: PatchRegion,
    disk: Disk,
    bound: TheoremBound,
) -> TimeSeriesRecord:
    l1 = symmetric_difference_area(region, disk)
    return TimeSeriesRecord(
        t=patch.time,
        moments=region_moments(region),
        q=q_value(region, disk).q,
        l1=l1,
        bound=bound.bound,
        margin=bound.bound - l1 * l1,
    )


def _spacing(loop: FloatArray) -> FloatArray:
    gaps = np.roll(loop, -1, axis=0) - loop
    return np.sqrt(gaps[:, 0] * gaps[:, 0] + gaps[:, 1] * gaps[:, 1])


def _remesh_loop(loop: FloatArray, s_min: float, s_max: float) -> FloatArray:
    spacing = _spacing(loop)
    if spacing.min() >= s_min and spacing.max() <= s_max:
        return loop

    kept = _drop_crowded(loop, s_min, s_max)
    spacing = _spacing(kept)
    count = len(kept)
    positions: list[int] = []
    inserted: list[FloatArray] = []
    for i in np.flatnonzero(spacing > s_max):
        pieces = math.ceil(spacing[i] / s_max - EPS_GEOM)
        if pieces < 2:
            continue
        before, after = (i - 1) % count, (i + 1) % count
        nodes = kept[[before, i, after, (i + 2) % count]]
        chord = np.array([-spacing[before], 0.0, spacing[i], spacing[i] + spacing[after]])
        params = spacing[i] * np.arange(1, pieces) / pieces
        inserted.append(_cubic_through(nodes, chord, params))
        positions.extend([int(i) + 1] * (pieces - 1))

    if inserted:
        refined = np.insert(kept, positions, np.concatenate(inserted), axis=0)
    elif kept is loop:
        return loop
    else:
        refined = kept
    target = _signed_area(loop)
    refined = _restore_area(refined, target)
    log_event(
        "evolve.remeshed",
        level=logging.DEBUG,
        before=len(loop),
        after=len(refined),
        area_change=abs(_signed_area(refined) - target),
    )
    return refined


def _drop_crowded(loop: FloatArray, s_min: float, s_max: float) -> FloatArray:
    spacing = _spacing(loop)
    if spacing.min() >= s_min:
        return loop
    keep = np.ones(len(loop), dtype=bool)
    remaining = len(loop)
    last = 0
    for j in range(1, len(loop)):
        gap = float(np.hypot(*(loop[j] - loop[last])))
        following = float(np.hypot(*(loop[(j + 1) % len(loop)] - loop[last])))
        if gap < s_min and following <= s_max and remaining > MIN_MARKERS:
            keep[j] = False
            remaining -= 1
        else:
            last = j
    return loop[keep]


def _cubic_through(nodes: FloatArray, chord: FloatArray, params: FloatArray) -> FloatArray:
    """Lagrange cubic through four nodes at chord-length parameters."""

    weights = np.ones((len(params), 4))
    for j in range(4):
        for m in range(4):
            if m != j:
                weights[:, j] *= (params - chord[m]) / (chord[j] - chord[m])
    return weights @ nodes


def _signed_area(loop: FloatArray) -> float:
    x, y = loop.T
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _restore_area(loop: FloatArray, target: float) -> FloatArray:
    """Shift markers along the area gradient until the signed area equals ``target``.

    The shoelace area is quadratic along that direction, so one root solve
    lands on the target up to rounding.
    """

    x, y = loop.T
    gradient = 0.5 * np.column_stack(
        (np.roll(y, -1) - np.roll(y, 1), np.roll(x, 1) - np.roll(x, -1))
    )
    linear = float(np.sum(gradient * gradient))
    quadratic = _signed_area(gradient)
    offset = _signed_area(loop) - target
    discriminant = linear * linear - 4.0 * quadratic * offset
    if linear == 0.0 or discriminant < 0.0:
        return loop
    # smaller root of quadratic*t^2 + linear*t + offset
    t = -2.0 * offset / (linear + math.sqrt(discriminant))
    return loop + t * gradient
