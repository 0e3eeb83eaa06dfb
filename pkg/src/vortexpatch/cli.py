"""Command-line entrypoint: ``vortexpatch <kind> --config <path> [--out <dir>]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Any

from .config import KINDS, ScenarioConfig, dump_config, load_config
from .dynamics import (
    CSV_HEADER,
    DiscretizedPatch,
    TimeSeriesRecord,
    conservation_drift,
    evolve,
)
from .errors import ConfigError, DomainError, EvolutionAbortedError, ValidationError
from .geometry import (
    ORIGIN,
    Disk,
    Loop,
    PatchRegion,
    Point,
    disk_moments,
    dump_region,
    region_moments,
    second_moment_tensor,
    sup_weight,
    symmetric_difference_area,
    translate,
)
from .logs import configure_logging, log_event
from .oracle import (
    McConfig,
    grid_for,
    grid_moments,
    grid_q_additivity,
    grid_q_direct,
    grid_sup_weight,
    mc_symmetric_difference,
)
from .stability import (
    best_fit_disk,
    inequality_holds,
    lemma1_gap,
    lemma2_check,
    prelim_check,
    q_value,
    set_split_check,
    theorem_bound,
)

REPORT_FILENAME = "report.json"
SERIES_FILENAME = "series.csv"
SNAPSHOT_DIRNAME = "snapshots"
ADDITIVITY_RTOL = 1e-3


class ExitCode(IntEnum):
    OK = 0
    CHECK_FAILED = 1
    CONFIG_ERROR = 2
    INVALID_INPUT = 3


@dataclass(slots=True, frozen=True)
class Check:
    """An asserted relation ``value <= limit``."""

    name: str
    value: float
    limit: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, value: float, limit: float, tolerance: float = 0.0) -> Check:
        return cls(name, value, limit, inequality_holds(value, limit, tolerance))

    @classmethod
    def within(cls, name: str, error: float, limit: float) -> Check:
        return cls(name, error, limit, error <= limit)

    def to_payload(self) -> dict[str, Any]:
        return {"name": self.name, "value": self.value, "limit": self.limit, "passed": self.passed}


@dataclass(slots=True)
class Outcome:
    results: dict[str, Any]
    checks: list[Check] = field(default_factory=list)
    series: list[TimeSeriesRecord] | None = None
    aborted: str | None = None

    @property
    def passed(self) -> bool:
        return self.aborted is None and all(check.passed for check in self.checks)


Runner = Callable[[ScenarioConfig, PatchRegion, Path], Outcome]


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    config_path = Path(args.config)

    try:
        config = load_config(config_path)
        if config.kind is not None and config.kind != args.kind:
            raise ConfigError(
                f"Field 'kind' is {config.kind!r} but the '{args.kind}' command was run"
            )
    except ConfigError as exc:
        log_event("config.load_failed", level=logging.ERROR, path=config_path, reason=str(exc))
        return ExitCode.CONFIG_ERROR
    log_event("config.loaded", path=config_path, kind=args.kind)

    out = Path(args.out) if args.out is not None else Path(config.output)
    return run(config, kind=args.kind, out=out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexpatch",
        description="Check stability inequalities for vortex patches and evolve them.",
    )
    commands = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        command = commands.add_parser(kind, help=_RUNNERS[kind].__doc__)
        command.add_argument("--config", required=True, help="scenario file (JSON or YAML)")
        command.add_argument("--out", default=None, help="output directory")
    return parser


def run(config: ScenarioConfig, *, kind: str | None = None, out: Path | None = None) -> int:
    """Run one scenario and write its artifacts; returns the process exit status."""

    kind = kind or config.kind
    if kind not in _RUNNERS:
        log_event("scenario.failed", level=logging.ERROR, reason=f"unknown kind {kind!r}")
        return ExitCode.CONFIG_ERROR
    out = out if out is not None else Path(config.output)

    try:
        region = config.region.load()
    except ConfigError as exc:
        log_event("region.load_failed", level=logging.ERROR, reason=str(exc))
        return ExitCode.CONFIG_ERROR
    except (ValidationError, DomainError) as exc:
        log_event("region.load_failed", level=logging.ERROR, reason=str(exc))
        return ExitCode.INVALID_INPUT
    log_event("region.loaded", loops=len(region.loops), vertices=region.vertex_count)

    log_event("scenario.start", kind=kind, out=out)
    try:
        outcome = _RUNNERS[kind](config, region, out)
    except (ValidationError, DomainError) as exc:
        log_event("scenario.failed", level=logging.ERROR, kind=kind, reason=str(exc))
        return ExitCode.INVALID_INPUT

    for check in outcome.checks:
        if not check.passed:
            log_event("check.failed", level=logging.WARNING, **check.to_payload())

    out.mkdir(parents=True, exist_ok=True)
    if outcome.series is not None:
        _write_series(out / SERIES_FILENAME, outcome.series)
    _write_report(out / REPORT_FILENAME, kind, config, outcome)

    status = ExitCode.OK if outcome.passed else ExitCode.CHECK_FAILED
    log_event("scenario.finished", kind=kind, passed=outcome.passed, exit_code=int(status))
    return status


def _run_moments(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """Exact mass, momentum, angular momentum and inertia tensor of the region."""

    moments = region_moments(region)
    ixx, ixy, iyy = second_moment_tensor(region)
    centroid = moments.centroid
    results: dict[str, Any] = {
        "moments": moments.to_payload(),
        "centroid": [centroid.x, centroid.y],
        "perimeter": region.perimeter,
        "inertia_tensor": {"xx": ixx, "xy": ixy, "yy": iyy},
    }
    if config.disk is not None:
        results["disk_moments"] = disk_moments(config.disk.to_disk()).to_payload()
    return Outcome(results)


def _run_lemma1(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """Nonnegativity of the moment gap and the best-fit disk."""

    moments = region_moments(region)
    gap = lemma1_gap(region)
    fit = best_fit_disk(region)
    results = {
        "gap": gap,
        "best_fit_disk": fit.to_payload(),
        "q_best_fit": q_value(region, fit).q,
        "moments": moments.to_payload(),
    }
    tolerance = config.tolerances.inequality * moments.angular
    return Outcome(results, [Check.within("gap_nonnegative", -gap, tolerance)])


def _run_lemma2(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """|A △ B|^2 <= 4 pi Q(A; B) for an origin-centred disk."""

    disk = config.comparison_disk(region)
    report = lemma2_check(region, disk)
    split = set_split_check(region, disk)
    results = {
        "disk": disk.to_payload(),
        **report.to_payload(),
        "relative_margin": report.relative_margin,
        "set_split": split._asdict(),
    }
    tolerance = config.tolerances.inequality
    return Outcome(
        results,
        [
            Check.at_most("lemma2", report.lemma2_lhs, report.lemma2_rhs, tolerance),
            Check.at_most("set_split", split.lhs, split.rhs, tolerance),
        ],
    )


def _run_prelim(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """(|A| - pi r^2)^2 <= 2 pi Q(A; B) for an origin-centred disk."""

    disk = config.comparison_disk(region)
    check = prelim_check(region, disk)
    results = {"disk": disk.to_payload(), "lhs": check.lhs, "rhs": check.rhs}
    tolerance = config.tolerances.inequality
    return Outcome(results, [Check.at_most("prelim", check.lhs, check.rhs, tolerance)])


def _run_bound(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """Time-uniform bound on |Ω_t △ B|^2 from the initial region."""

    disk = config.comparison_disk(region)
    bound = theorem_bound(region, disk)
    l1 = bound.initial_l1
    tolerance = config.tolerances.inequality
    return Outcome(
        {"disk": disk.to_payload(), **bound.to_payload()},
        [
            Check.at_most("q_below_sup_times_l1", bound.q_initial, bound.q_upper, tolerance),
            Check.at_most("initial_l1_squared", l1 * l1, bound.bound, tolerance),
        ],
    )


def _run_verify(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """Exact functionals against the grid and Monte Carlo oracles."""

    disk = config.comparison_disk(region)
    pitch = config.oracle.pitch
    slack = config.tolerances.oracle
    grid = grid_for([region], disk, pitch)
    reach = _reach(grid.lower, grid.upper, disk)
    perimeter = region.perimeter

    exact = region_moments(region)
    approx = grid_moments(region, grid)
    momentum_error = math.dist(exact.momentum, approx.momentum)

    # the weight is measured from the disk centre
    centre = disk.center
    recentred = translate(region, Point(-centre.x, -centre.y))
    exact_sup = sup_weight(recentred, Disk(ORIGIN, disk.radius))
    exact_q = q_value(region, disk).q
    q_model = pitch * (perimeter * exact_sup + 4.0 * math.pi * disk.radius**2 * pitch)
    grid_q = grid_q_direct(region, disk, grid)
    additivity = grid_q_additivity(region, disk, grid)
    grid_sup = grid_sup_weight(region, disk, grid)

    exact_l1 = symmetric_difference_area(region, disk)
    mc = mc_symmetric_difference(
        region, disk, McConfig(samples=config.oracle.samples, seed=config.oracle.seed)
    )
    mc_floor = 4.0 * reach**2 / config.oracle.samples

    results = {
        "disk": disk.to_payload(),
        "grid": {"pitch": pitch, "shape": list(grid.shape)},
        "moments": {"exact": exact.to_payload(), "grid": approx.to_payload()},
        "q": {"exact": exact_q, "grid": grid_q},
        "q_additivity": additivity._asdict(),
        "sup_weight": {"exact": exact_sup, "grid": grid_sup},
        "symmetric_difference": {"exact": exact_l1, **mc._asdict()},
    }
    checks = [
        Check.within("grid_mass", abs(exact.mass - approx.mass), slack * pitch * perimeter),
        Check.within("grid_momentum", momentum_error, slack * pitch * perimeter * reach),
        Check.within(
            "grid_angular",
            abs(exact.angular - approx.angular),
            slack * pitch * perimeter * reach**2,
        ),
        Check.within("grid_q_direct", abs(grid_q - exact_q), slack * q_model),
        Check.within(
            "grid_q_additivity",
            abs(additivity.lhs - additivity.rhs),
            ADDITIVITY_RTOL * additivity.rhs,
        ),
        Check.within("grid_sup_weight", abs(grid_sup - exact_sup), slack * pitch * 2.0 * reach),
        Check.within(
            "mc_symmetric_difference", abs(mc.estimate - exact_l1), slack * mc.stderr + mc_floor
        ),
    ]
    return Outcome(results, checks)


def _run_evolve(config: ScenarioConfig, region: PatchRegion, out: Path) -> Outcome:
    """Contour-dynamics evolution with the stability bound sampled along the way."""

    disk = config.comparison_disk(region)
    params = config.evolution
    patch = DiscretizedPatch.from_region(region)
    snapshots = out / SNAPSHOT_DIRNAME

    def snapshot(step: int, current: DiscretizedPatch) -> None:
        if params.snapshot_stride and step % params.snapshot_stride == 0:
            _write_snapshot(snapshots, step, current)

    def first_sample(step: int, current: DiscretizedPatch, _: TimeSeriesRecord) -> None:
        if step == 0:
            snapshot(step, current)

    try:
        records = evolve(patch, disk, params, on_sample=first_sample, on_step=snapshot)
    except EvolutionAbortedError as exc:
        return Outcome(
            {"disk": disk.to_payload(), "samples": len(exc.records)},
            series=exc.records,
            aborted=exc.reason,
        )

    drift = conservation_drift(records)
    first = records[0].moments
    momentum_scale = math.sqrt(first.mass * first.angular)
    allowance = config.tolerances.drift
    worst = min(records, key=lambda record: record.margin)
    results = {
        "disk": disk.to_payload(),
        "samples": len(records),
        "bound": records[0].bound,
        "worst_margin": {"t": worst.t, "margin": worst.margin, "l1": worst.l1},
        "drift": drift.to_payload(),
    }
    checks = [
        Check.at_most(f"l1_squared_at_t={record.t:.6g}", record.l1**2, record.bound, allowance)
        for record in records
    ]
    checks += [
        Check.at_most("mass_drift", drift.mass, allowance),
        Check.at_most("momentum_drift", drift.momentum / momentum_scale, allowance),
        Check.at_most("angular_drift", drift.angular, allowance),
        Check.at_most("q_drift", drift.q, allowance),
    ]
    return Outcome(results, checks, series=records)


_RUNNERS: dict[str, Runner] = {
    "moments": _run_moments,
    "lemma1": _run_lemma1,
    "lemma2": _run_lemma2,
    "prelim": _run_prelim,
    "bound": _run_bound,
    "evolve": _run_evolve,
    "verify": _run_verify,
}


def _reach(lower: Point, upper: Point, disk: Disk) -> float:
    # farthest grid corner from the disk centre
    return max(
        math.hypot(x - disk.center.x, y - disk.center.y)
        for x in (lower.x, upper.x)
        for y in (lower.y, upper.y)
    )


def _write_report(path: Path, kind: str, config: ScenarioConfig, outcome: Outcome) -> None:
    failures = [check.to_payload() for check in outcome.checks if not check.passed]
    payload = {
        "kind": kind,
        "config": json.loads(dump_config(config)),
        "results": outcome.results,
        "checks": [check.to_payload() for check in outcome.checks],
        "failures": failures,
        "aborted": outcome.aborted,
        "passed": outcome.passed,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log_event("artifact.written", path=path)


def _write_series(path: Path, records: Sequence[TimeSeriesRecord]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(record.csv_row() for record in records)
    log_event("artifact.written", path=path, rows=len(records))


def _write_snapshot(directory: Path, step: int, patch: DiscretizedPatch) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    region = PatchRegion(tuple(Loop(loop) for loop in patch.loops))
    path = directory / f"region_{step:06d}.json"
    path.write_text(dump_region(region) + "\n", encoding="utf-8")
    log_event("artifact.written", level=logging.DEBUG, path=path, t=patch.time)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
