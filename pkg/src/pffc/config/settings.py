from __future__ import annotations

import copy
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import load_dotenv

from ..errors import ConfigError

logger = logging.getLogger(__name__)

ROOT_DIR = Path(__file__).resolve().parents[3]
CONFIG_DIR = Path(__file__).resolve().parent
DEFAULTS_PATH = CONFIG_DIR / "defaults.yaml"

PROBLEMS = ("custom-1d", "ext-1d", "r4nr", "minflow")
SOLVERS = ("pffc", "pgd")
SCHEDULES = ("parsel1", "parsel2", "explicit")
# replaced wholesale when merging a user file
_REPLACED_KEYS = frozenset({"schedule", "lmo"})


def load_env() -> None:
    """Load environment variables from .env if present."""
    env_path = ROOT_DIR / ".env"
    if env_path.exists():
        load_dotenv(env_path)


def get_default_seed() -> int:
    """``PFFC_SEED`` as an integer, 0 when unset or malformed."""

    raw = os.getenv("PFFC_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        logger.warning("ignoring non-integer PFFC_SEED=%r", raw)
        return 0


def get_log_level() -> str:
    return os.getenv("PFFC_LOG_LEVEL", "WARNING").upper()


def get_workers() -> int | None:
    raw = os.getenv("PFFC_WORKERS")
    if raw is None:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def _load_yaml(path: Path) -> Dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping at the top level")
    return data


def load_defaults() -> Dict[str, Any]:
    return _load_yaml(DEFAULTS_PATH)


def merge_config(base: Mapping[str, Any], override: Mapping[str, Any], top: bool = True) -> Dict[str, Any]:
    """Recursive merge of *override* into a copy of *base*."""

    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if top and key in _REPLACED_KEYS:
            merged[key] = copy.deepcopy(value)
        elif isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_config(merged[key], value, top=False)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one ``pffc solve`` invocation."""

    problem: str
    problem_params: Mapping[str, Any]
    solver: str
    schedule: str
    schedule_params: Mapping[str, Any]
    T: int
    delta: float
    seed: int
    output: Path
    stride: Optional[int] = None
    lmo_power_iters: Optional[int] = None
    pgd: Mapping[str, Any] = field(default_factory=dict)
    measure_gap: bool = False


def _positive_int(name: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def _number(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _parse_schedule(raw: Any) -> tuple[str, Dict[str, Any]]:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"schedule must be a mapping with one of {SCHEDULES}, got {raw!r}")
    keys = [k for k in raw if k in SCHEDULES]
    unknown = [k for k in raw if k not in SCHEDULES]
    if unknown:
        raise ConfigError(f"unknown schedule {unknown[0]!r}; choose one of {SCHEDULES}")
    if len(keys) != 1:
        raise ConfigError(f"exactly one schedule must be given, got {sorted(keys) or 'none'}")
    kind = keys[0]
    params = dict(raw[kind] or {})
    if kind == "parsel1":
        eps = _number("schedule.parsel1.epsilon", params.get("epsilon"))
        if eps <= 0:
            raise ConfigError(f"schedule.parsel1.epsilon must be positive, got {eps}")
    elif kind == "explicit":
        for name in ("eta", "alpha", "beta"):
            if _number(f"schedule.explicit.{name}", params.get(name)) <= 0:
                raise ConfigError(f"schedule.explicit.{name} must be positive")
    return kind, params


def _parse_lmo(raw: Any) -> Optional[int]:
    if raw in (None, "exact"):
        return None
    if isinstance(raw, Mapping) and set(raw) == {"power"}:
        return _positive_int("lmo.power", raw["power"])
    if isinstance(raw, str) and raw.startswith("power:"):
        try:
            return _positive_int("lmo.power", int(raw.split(":", 1)[1]))
        except ValueError as exc:
            raise ConfigError(f"bad lmo mode {raw!r}") from exc
    raise ConfigError(f"lmo must be 'exact' or {{power: n}}, got {raw!r}")


def _existing_file(name: str, value: Any, base_dir: Path) -> Optional[str]:
    if value is None:
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise ConfigError(f"{name} refers to a missing file: {value}")
    return str(path)


def build_run_config(data: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    """Validate a merged configuration mapping into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        On unknown selectors, missing or contradictory schedules, bad scalars
        or references to files that do not exist.
    """

    base_dir = base_dir or Path.cwd()
    problem_block = data.get("problem") or {}
    kind = problem_block.get("kind")
    if kind not in PROBLEMS:
        raise ConfigError(f"problem.kind must be one of {PROBLEMS}, got {kind!r}")
    problem_params = dict(problem_block.get(kind) or {})
    if kind == "minflow":
        problem_params["graph"] = _existing_file("problem.minflow.graph", problem_params.get("graph"), base_dir)
    if kind == "r4nr":
        problem_params["fixture"] = _existing_file("problem.r4nr.fixture", problem_params.get("fixture"), base_dir)

    solver = data.get("solver", "pffc")
    if solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {solver!r}")
    schedule, schedule_params = _parse_schedule(data.get("schedule"))

    seed = data.get("seed")
    if seed is None:
        seed = get_default_seed()
    elif isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    delta = _number("delta", data.get("delta", 0.0))
    if delta < 0:
        raise ConfigError(f"delta must be >= 0, got {delta}")
    stride = data.get("stride")
    if stride is not None:
        stride = _positive_int("stride", stride)

    measure_gap = data.get("measure_gap", False)
    if not isinstance(measure_gap, bool):
        raise ConfigError(f"measure_gap must be true or false, got {measure_gap!r}")
    if measure_gap and solver == "pgd":
        raise ConfigError("measure_gap needs the pffc solver; pgd makes no LMO calls")

    return RunConfig(
        problem=kind,
        problem_params=problem_params,
        solver=solver,
        schedule=schedule,
        schedule_params=schedule_params,
        T=_positive_int("T", data.get("T")),
        delta=delta,
        seed=seed,
        output=Path(data.get("output") or "reports/run.csv"),
        stride=stride,
        lmo_power_iters=_parse_lmo(data.get("lmo", "exact")),
        pgd=dict(data.get("pgd") or {}),
        measure_gap=measure_gap,
    )


def load_run_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Defaults, then the user file, then flag *overrides*, validated.

    Override keys use dots for nesting (``problem.kind``); ``None`` values
    are skipped.
    """

    load_env()
    data = load_defaults()
    base_dir = Path.cwd()
    if path is not None:
        user_path = Path(path)
        data = merge_config(data, _load_yaml(user_path))
        base_dir = user_path.resolve().parent
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            target = target.setdefault(key, {})
        target[leaf] = value
    return build_run_config(data, base_dir)


__all__ = [
    "ROOT_DIR",
    "CONFIG_DIR",
    "DEFAULTS_PATH",
    "PROBLEMS",
    "SOLVERS",
    "SCHEDULES",
    "load_env",
    "get_default_seed",
    "get_log_level",
    "get_workers",
    "load_defaults",
    "merge_config",
    "RunConfig",
    "build_run_config",
    "load_run_config",
]
