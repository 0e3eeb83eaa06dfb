from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from vortexpatch.config import (
    DEFAULT_OUTPUT,
    OracleSettings,
    Tolerances,
    dump_config,
    load_config,
    parse_config,
)
from vortexpatch.dynamics import EvolutionParams
from vortexpatch.errors import ConfigError
from vortexpatch.geometry import ORIGIN, Point


def _write_config(tmp_path: Path, payload: dict[str, object]) -> Path:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _square_scenario(**extra: object) -> dict[str, object]:
    return {
        "kind": "lemma1",
        "region": {"fixture": {"name": "square", "params": {"s": 1.0}}},
        **extra,
    }


def test_load_config_fills_defaults(tmp_path: Path) -> None:
    config = load_config(_write_config(tmp_path, _square_scenario()))

    assert config.kind == "lemma1"
    assert config.disk is None
    assert config.evolution == EvolutionParams()
    assert config.oracle == OracleSettings(pitch=0.005, samples=1_000_000, seed=42)
    assert config.tolerances == Tolerances(inequality=1e-9, drift=1e-4, oracle=3.0)
    assert config.output == DEFAULT_OUTPUT
    fixture = config.region.fixture
    assert fixture is not None
    assert fixture.params == {"s": 1.0}
    assert fixture.center == ORIGIN


def test_comparison_disk_defaults_to_mass_matched_origin_disk(tmp_path: Path) -> None:
    config = load_config(_write_config(tmp_path, _square_scenario()))
    region = config.region.load()

    disk = config.comparison_disk(region)

    assert disk.center == ORIGIN
    assert disk.radius == pytest.approx(2.0 / math.sqrt(math.pi))


def test_explicit_disk_and_evolution_settings(tmp_path: Path) -> None:
    payload = _square_scenario(
        disk={"r": 1.5, "center": [0.5, -1.0]},
        evolution={"dt": 0.02, "t_end": 1.0, "workers": 2, "s_min": 0.01, "s_max": 0.05},
    )

    config = load_config(_write_config(tmp_path, payload))

    assert config.disk is not None
    assert config.disk.to_disk().center == Point(0.5, -1.0)
    assert config.evolution.dt == 0.02
    assert config.evolution.workers == 2
    assert config.evolution.s_max == 0.05


def test_region_needs_exactly_one_source(tmp_path: Path) -> None:
    payload = _square_scenario(
        region={"file": "a.json", "fixture": {"name": "square", "params": {"s": 1.0}}}
    )

    with pytest.raises(ConfigError, match="exactly one of 'file' or 'fixture'"):
        load_config(_write_config(tmp_path, payload))


def test_unknown_keys_report_dotted_path() -> None:
    text = json.dumps(_square_scenario(evolution={"dt": 0.01, "step_size": 0.1}))

    with pytest.raises(ConfigError, match=r"Unknown field 'evolution\.step_size'"):
        parse_config(text)


def test_missing_fixture_param_is_reported() -> None:
    text = json.dumps({"region": {"fixture": {"name": "ellipse", "params": {"a": 2.0}}}})

    with pytest.raises(ConfigError, match=r"region\.fixture\.params\.b' must be provided"):
        parse_config(text)


@pytest.mark.parametrize(
    ("payload", "message"),
    [
        (_square_scenario(disk={"r": True}), "disk.r' must be numeric"),
        (_square_scenario(disk={"r": -1.0}), "disk.r' must be > 0"),
        (_square_scenario(kind="simulate"), "Field 'kind' must be one of"),
        (_square_scenario(oracle={"samples": 0}), "oracle.samples' must be > 0"),
        (_square_scenario(evolution={"workers": 1.5}), "evolution.workers' must be an integer"),
        (_square_scenario(evolution={"dt": -0.1}), "dt"),
        ({"kind": "lemma1"}, "Field 'region' must be provided"),
    ],
)
def test_invalid_values_are_config_errors(payload: dict[str, object], message: str) -> None:
    with pytest.raises(ConfigError, match=message):
        parse_config(json.dumps(payload))


def test_yaml_documents_are_accepted() -> None:
    text = """
    kind: bound
    region:
      fixture:
        name: circle
        params:
          r: 1.2
          n: 256
    disk:
      r: 1.0
    """

    config = parse_config(text)

    assert config.kind == "bound"
    fixture = config.region.fixture
    assert fixture is not None
    assert fixture.params == {"n": 256, "r": 1.2}


def test_malformed_document_is_rejected() -> None:
    with pytest.raises(ConfigError):
        parse_config("region: [unterminated")


def test_dump_config_round_trips(tmp_path: Path) -> None:
    payload = _square_scenario(disk={"r": 1.0}, oracle={"pitch": 0.01, "seed": 7})
    config = load_config(_write_config(tmp_path, payload))

    dumped = dump_config(config)

    assert parse_config(dumped) == config
    assert json.loads(dumped)["oracle"] == {"pitch": 0.01, "samples": 1_000_000, "seed": 7}


def test_relative_region_file_resolves_against_config_dir(tmp_path: Path) -> None:
    region_path = tmp_path / "region.json"
    region_path.write_text(
        json.dumps({"loops": [[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]]}),
        encoding="utf-8",
    )
    config = load_config(_write_config(tmp_path, {"region": {"file": "region.json"}}))

    assert config.region.file == Path("region.json")
    assert config.region.path == region_path
    assert config.region.load().area == pytest.approx(1.0)


def test_dump_config_keeps_relative_region_file(tmp_path: Path) -> None:
    nested = tmp_path / "scenarios"
    nested.mkdir()
    (nested / "region.json").write_text(
        json.dumps({"loops": [[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]]}),
        encoding="utf-8",
    )
    config = load_config(_write_config(nested, {"region": {"file": "region.json"}}))

    dumped = dump_config(config)
    reparsed = parse_config(dumped, base_dir=nested)

    assert json.loads(dumped)["region"] == {"file": "region.json"}
    assert reparsed == config
    assert dump_config(reparsed) == dumped
    assert reparsed.region.load().area == pytest.approx(4.0)


def test_load_config_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="Unable to read config"):
        load_config(tmp_path / "absent.json")
