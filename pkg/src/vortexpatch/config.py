"""Scenario configuration loading helpers."""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .dynamics import EvolutionParams
from .errors import ConfigError, DomainError
from .fixtures import FIXTURES, build_fixture
from .geometry import ORIGIN, Disk, PatchRegion, Point, load_region

KINDS = ("moments", "lemma1", "lemma2", "prelim", "bound", "evolve", "verify")
DEFAULT_OUTPUT = "out"

_TOP_LEVEL_KEYS = frozenset(
    {"kind", "region", "disk", "evolution", "oracle", "tolerances", "output"}
)
_EVOLUTION_FLOATS = ("dt", "t_end", "c_cfl")
_EVOLUTION_INTS = ("output_stride", "snapshot_stride", "workers", "max_rejections")


@dataclass(slots=True, frozen=True)
class FixtureSource:
    name: str
    params: dict[str, float]
    center: Point = ORIGIN


@dataclass(slots=True, frozen=True)
class RegionSource:
    """Exactly one of ``file`` or ``fixture``.

    ``file`` keeps the path as written; relative paths resolve against ``base_dir``.
    """

    file: Path | None = None
    fixture: FixtureSource | None = None
    base_dir: Path | None = None

    @property
    def path(self) -> Path | None:
        if self.file is None or self.base_dir is None or self.file.is_absolute():
            return self.file
        return self.base_dir / self.file

    def load(self) -> PatchRegion:
        if self.path is not None:
            return load_region(self.path)
        if self.fixture is None:
            raise ConfigError("Field 'region' needs one of 'file' or 'fixture'")
        return build_fixture(self.fixture.name, self.fixture.params, self.fixture.center)


@dataclass(slots=True, frozen=True)
class DiskSettings:
    r: float
    center: Point = ORIGIN

    def to_disk(self) -> Disk:
        return Disk(self.center, self.r)


@dataclass(slots=True, frozen=True)
class OracleSettings:
    pitch: float = 0.005
    samples: int = 1_000_000
    seed: int = 42


@dataclass(slots=True, frozen=True)
class Tolerances:
    inequality: float = 1e-9
    drift: float = 1e-4
    oracle: float = 3.0


@dataclass(slots=True, frozen=True)
class ScenarioConfig:
    region: RegionSource
    kind: str | None = None
    disk: DiskSettings | None = None
    evolution: EvolutionParams = field(default_factory=EvolutionParams)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str = DEFAULT_OUTPUT

    def comparison_disk(self, region: PatchRegion) -> Disk:
        """Configured disk, or the origin disk with the region's mass."""

        if self.disk is not None:
            return self.disk.to_disk()
        return Disk(ORIGIN, math.sqrt(region.area / math.pi))


def load_config(path: Path) -> ScenarioConfig:
    """Load a scenario from a JSON (or YAML) document."""

    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"Unable to read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def parse_config(text: str, *, base_dir: Path | None = None) -> ScenarioConfig:
    raw = _decode(text)
    root = _require_mapping(raw, "config")
    _reject_unknown(root, _TOP_LEVEL_KEYS, "")

    kind = root.get("kind")
    if kind is not None and kind not in KINDS:
        raise ConfigError(f"Field 'kind' must be one of {', '.join(KINDS)}, got {kind!r}")

    if "region" not in root:
        raise ConfigError("Field 'region' must be provided")

    try:
        return ScenarioConfig(
            kind=kind,
            region=_parse_region(root["region"], base_dir),
            disk=_parse_disk(root["disk"]) if root.get("disk") is not None else None,
            evolution=_parse_evolution(root.get("evolution") or {}),
            oracle=_parse_oracle(root.get("oracle") or {}),
            tolerances=_parse_tolerances(root.get("tolerances") or {}),
            output=_optional_str(root, "output", "", DEFAULT_OUTPUT),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(config: ScenarioConfig) -> str:
    """Canonical JSON with every default filled in."""

    region: dict[str, Any]
    fixture = config.region.fixture
    if config.region.file is not None:
        region = {"file": str(config.region.file)}
    elif fixture is None:
        raise ConfigError("Field 'region' needs one of 'file' or 'fixture'")
    else:
        region = {
            "fixture": {
                "name": fixture.name,
                "params": dict(fixture.params),
                "center": [fixture.center.x, fixture.center.y],
            }
        }
    evolution = config.evolution
    payload: dict[str, Any] = {
        "kind": config.kind,
        "region": region,
        "disk": (
            None
            if config.disk is None
            else {"r": config.disk.r, "center": [config.disk.center.x, config.disk.center.y]}
        ),
        "evolution": {
            "dt": evolution.dt,
            "t_end": evolution.t_end,
            "s_min": evolution.s_min,
            "s_max": evolution.s_max,
            "output_stride": evolution.output_stride,
            "snapshot_stride": evolution.snapshot_stride,
            "c_cfl": evolution.c_cfl,
            "workers": evolution.workers,
            "max_rejections": evolution.max_rejections,
        },
        "oracle": {
            "pitch": config.oracle.pitch,
            "samples": config.oracle.samples,
            "seed": config.oracle.seed,
        },
        "tolerances": {
            "inequality": config.tolerances.inequality,
            "drift": config.tolerances.drift,
            "oracle": config.tolerances.oracle,
        },
        "output": config.output,
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def _decode(text: str) -> Any:
    # JSON first: PyYAML reads exponents such as 1e-9 as strings
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config is neither valid JSON nor YAML: {exc}") from exc


def _parse_region(raw: Any, base_dir: Path | None) -> RegionSource:
    source = _require_mapping(raw, "region")
    _reject_unknown(source, frozenset({"file", "fixture"}), "region")
    has_file = source.get("file") is not None
    has_fixture = source.get("fixture") is not None
    if has_file == has_fixture:
        raise ConfigError("Field 'region' needs exactly one of 'file' or 'fixture'")

    if has_file:
        name = _require_str(source, "file", "region")
        return RegionSource(file=Path(name), base_dir=base_dir)

    fixture = _require_mapping(source["fixture"], "region.fixture")
    _reject_unknown(fixture, frozenset({"name", "params", "center"}), "region.fixture")
    name = _require_str(fixture, "name", "region.fixture")
    if name not in FIXTURES:
        known = ", ".join(sorted(FIXTURES))
        raise ConfigError(f"Field 'region.fixture.name' must be one of {known}, got {name!r}")
    spec = FIXTURES[name]

    params_raw = _require_mapping(fixture.get("params") or {}, "region.fixture.params")
    _reject_unknown(params_raw, spec.params, "region.fixture.params")
    params: dict[str, float] = {}
    for key in sorted(spec.params):
        if key not in params_raw:
            if key in spec.required:
                raise ConfigError(f"Field 'region.fixture.params.{key}' must be provided")
            continue
        if key in spec.integer_params:
            params[key] = _require_int(params_raw, key, "region.fixture.params")
        else:
            params[key] = _require_float(params_raw, key, "region.fixture.params")

    center = _optional_point(fixture, "center", "region.fixture")
    return RegionSource(fixture=FixtureSource(name=name, params=params, center=center))


def _parse_disk(raw: Any) -> DiskSettings:
    source = _require_mapping(raw, "disk")
    _reject_unknown(source, frozenset({"r", "center"}), "disk")
    radius = _require_float(source, "r", "disk")
    if radius <= 0:
        raise ConfigError("Field 'disk.r' must be > 0")
    return DiskSettings(r=radius, center=_optional_point(source, "center", "disk"))


def _parse_evolution(raw: Any) -> EvolutionParams:
    source = _require_mapping(raw, "evolution")
    allowed = frozenset(_EVOLUTION_FLOATS + _EVOLUTION_INTS + ("s_min", "s_max"))
    _reject_unknown(source, allowed, "evolution")
    values: dict[str, Any] = {}
    for key in _EVOLUTION_FLOATS:
        if key in source:
            values[key] = _require_float(source, key, "evolution")
    for key in _EVOLUTION_INTS:
        if key in source:
            values[key] = _require_int(source, key, "evolution")
    for key in ("s_min", "s_max"):
        if source.get(key) is not None:
            values[key] = _require_float(source, key, "evolution")
    return EvolutionParams(**values)


def _parse_oracle(raw: Any) -> OracleSettings:
    source = _require_mapping(raw, "oracle")
    _reject_unknown(source, frozenset({"pitch", "samples", "seed"}), "oracle")
    defaults = OracleSettings()
    pitch = _optional_float(source, "pitch", "oracle", defaults.pitch)
    samples = _optional_int(source, "samples", "oracle", defaults.samples)
    seed = _optional_int(source, "seed", "oracle", defaults.seed)
    if pitch <= 0:
        raise ConfigError("Field 'oracle.pitch' must be > 0")
    if samples <= 0:
        raise ConfigError("Field 'oracle.samples' must be > 0")
    if not 0 <= seed < 2**64:
        raise ConfigError("Field 'oracle.seed' must be an unsigned 64-bit integer")
    return OracleSettings(pitch=pitch, samples=samples, seed=seed)


def _parse_tolerances(raw: Any) -> Tolerances:
    source = _require_mapping(raw, "tolerances")
    _reject_unknown(source, frozenset({"inequality", "drift", "oracle"}), "tolerances")
    defaults = Tolerances()
    values = {
        key: _optional_float(source, key, "tolerances", getattr(defaults, key))
        for key in ("inequality", "drift", "oracle")
    }
    for key, value in values.items():
        if value < 0:
            raise ConfigError(f"Field 'tolerances.{key}' must be >= 0")
    return Tolerances(**values)


def _dotted(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require_mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"Field '{path}' must be a mapping")
    return value


def _reject_unknown(source: Mapping[str, Any], allowed: frozenset[str], path: str) -> None:
    unknown = sorted(set(source) - allowed)
    if unknown:
        raise ConfigError(f"Unknown field '{_dotted(path, str(unknown[0]))}'")


def _require_str(source: Mapping[str, Any], key: str, path: str) -> str:
    value = source.get(key)
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(f"Field '{_dotted(path, key)}' must be a non-empty string")
    return value.strip()


def _optional_str(source: Mapping[str, Any], key: str, path: str, default: str) -> str:
    if source.get(key) is None:
        return default
    return _require_str(source, key, path)


def _require_int(source: Mapping[str, Any], key: str, path: str) -> int:
    value = source.get(key)
    if value is None:
        raise ConfigError(f"Field '{_dotted(path, key)}' must be provided")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Field '{_dotted(path, key)}' must be an integer")
    return value


def _optional_int(source: Mapping[str, Any], key: str, path: str, default: int) -> int:
    return default if key not in source else _require_int(source, key, path)


def _require_float(source: Mapping[str, Any], key: str, path: str) -> float:
    value = source.get(key)
    if value is None:
        raise ConfigError(f"Field '{_dotted(path, key)}' must be provided")
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"Field '{_dotted(path, key)}' must be numeric")
    if not math.isfinite(value):
        raise ConfigError(f"Field '{_dotted(path, key)}' must be finite")
    return float(value)


def _optional_float(source: Mapping[str, Any], key: str, path: str, default: float) -> float:
    return default if key not in source else _require_float(source, key, path)


def _optional_point(source: Mapping[str, Any], key: str, path: str) -> Point:
    value = source.get(key)
    if value is None:
        return ORIGIN
    if (
        not isinstance(value, list)
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, int | float) for v in value)
        or not all(math.isfinite(v) for v in value)
    ):
        raise ConfigError(f"Field '{_dotted(path, key)}' must be a finite [x, y] pair")
    return Point(float(value[0]), float(value[1]))
