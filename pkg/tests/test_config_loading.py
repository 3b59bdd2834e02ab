from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml

from pffc.config import load_run_config
from pffc.config.settings import (
    DEFAULTS_PATH,
    build_run_config,
    get_log_level,
    get_workers,
    load_defaults,
    merge_config,
)
from pffc.errors import ConfigError


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch) -> None:
    for name in ("PFFC_SEED", "PFFC_LOG_LEVEL", "PFFC_WORKERS"):
        monkeypatch.delenv(name, raising=False)


def _write(path: Path, data: dict) -> Path:
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_defaults_yaml_exists() -> None:
    assert DEFAULTS_PATH.exists(), "defaults.yaml should exist"

    with DEFAULTS_PATH.open("r", encoding="utf-8") as f:
        cfg = yaml.safe_load(f)

    assert cfg["problem"]["kind"] == "custom-1d"
    assert set(cfg["problem"]) >= {"r4nr", "minflow", "ext-1d"}
    assert cfg["schedule"] == {"parsel2": {}}
    assert load_defaults() == cfg


def test_default_run_config() -> None:
    cfg = load_run_config()
    assert cfg.problem == "custom-1d"
    assert cfg.solver == "pffc"
    assert cfg.schedule == "parsel2"
    assert cfg.T == 1000
    assert cfg.seed == 0
    assert cfg.lmo_power_iters is None
    assert cfg.output == Path("reports/run.csv")


def test_seed_from_environment(monkeypatch) -> None:
    monkeypatch.setenv("PFFC_SEED", "42")
    assert load_run_config().seed == 42
    monkeypatch.setenv("PFFC_SEED", "forty-two")
    assert load_run_config().seed == 0


def test_environment_helpers(monkeypatch) -> None:
    assert get_log_level() == "WARNING"
    assert get_workers() is None
    monkeypatch.setenv("PFFC_LOG_LEVEL", "debug")
    monkeypatch.setenv("PFFC_WORKERS", "0")
    assert get_log_level() == "DEBUG"
    assert get_workers() == 1


def test_merge_replaces_schedule_and_merges_problem() -> None:
    base = load_defaults()
    merged = merge_config(base, {"schedule": {"parsel1": {"epsilon": 0.1}}, "problem": {"r4nr": {"n": 10}}})
    assert merged["schedule"] == {"parsel1": {"epsilon": 0.1}}
    assert merged["problem"]["r4nr"]["n"] == 10
    assert merged["problem"]["r4nr"]["q"] == 20
    assert base["schedule"] == {"parsel2": {}}


def test_user_yaml_and_json(tmp_path) -> None:
    cfg = load_run_config(_write(tmp_path / "run.yaml", {"schedule": {"parsel1": {"epsilon": 0.1}}, "T": 5}))
    assert cfg.schedule == "parsel1"
    assert cfg.schedule_params == {"epsilon": 0.1}

    path = tmp_path / "run.json"
    path.write_text(json.dumps({"problem": {"kind": "minflow", "minflow": {"formulation": "F4"}}}), encoding="utf-8")
    cfg = load_run_config(path)
    assert cfg.problem == "minflow"
    assert cfg.problem_params["formulation"] == "F4"
    assert cfg.problem_params["graph"] is None


def test_two_schedules_are_rejected(tmp_path) -> None:
    path = _write(tmp_path / "both.yaml", {"schedule": {"parsel1": {"epsilon": 0.1}, "parsel2": {}}})
    with pytest.raises(ConfigError):
        load_run_config(path)


@pytest.mark.parametrize(
    "schedule",
    [{}, {"adam": {}}, {"parsel1": {"epsilon": 0}}, {"explicit": {"eta": 1, "alpha": 1}}, "parsel2"],
)
def test_bad_schedules(schedule) -> None:
    data = merge_config(load_defaults(), {"schedule": schedule})
    with pytest.raises(ConfigError):
        build_run_config(data)


def test_missing_files(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.yaml")
    path = _write(tmp_path / "flow.yaml", {"problem": {"kind": "minflow", "minflow": {"graph": "nope.txt"}}})
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_graph_path_is_relative_to_the_config(tmp_path, data_dir) -> None:
    (tmp_path / "graph.txt").write_text((data_dir / "minflow_default.txt").read_text(encoding="utf-8"), encoding="utf-8")
    path = _write(tmp_path / "flow.yaml", {"problem": {"kind": "minflow", "minflow": {"graph": "graph.txt"}}})
    cfg = load_run_config(path)
    assert Path(cfg.problem_params["graph"]) == tmp_path.resolve() / "graph.txt"


def test_overrides() -> None:
    cfg = load_run_config(overrides={"problem.kind": "r4nr", "T": 50, "lmo": "power:3", "seed": None})
    assert cfg.problem == "r4nr"
    assert cfg.T == 50
    assert cfg.lmo_power_iters == 3
    assert cfg.problem_params["rank"] == 5


@pytest.mark.parametrize(
    "overrides",
    [{"T": 0}, {"delta": -1.0}, {"solver": "adam"}, {"problem.kind": "lasso"}, {"lmo": "power:x"}, {"stride": 0}, {"seed": 1.5}],
)
def test_invalid_values(overrides) -> None:
    with pytest.raises(ConfigError):
        load_run_config(overrides=overrides)


def test_non_mapping_file(tmp_path) -> None:
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_measure_gap_setting() -> None:
    assert load_run_config().measure_gap is False
    cfg = load_run_config(overrides={"problem.kind": "r4nr", "measure_gap": True})
    assert cfg.measure_gap is True
    assert load_run_config(overrides={"measure_gap": None}).measure_gap is False
    with pytest.raises(ConfigError):
        load_run_config(overrides={"measure_gap": "yes"})
    with pytest.raises(ConfigError):
        load_run_config(overrides={"problem.kind": "r4nr", "solver": "pgd", "measure_gap": True})
