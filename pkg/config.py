"""
Runtime settings and sweep configuration.

Settings resolve in layers: built-in defaults, then .env / environment
variables (SUMVERIFY_*), then the sweep JSON file, then explicit CLI flags.
"""

import dataclasses
import itertools
import json
import logging
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from dotenv import load_dotenv

from core_numeric import ParameterError, to_rational

logger = logging.getLogger(__name__)

ENV_PREFIX = "SUMVERIFY_"
MODES = ("exact", "float")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
RANGE_TOKEN = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")


class ConfigError(ParameterError):
    """Malformed settings or sweep configuration"""


@dataclass(frozen=True)
class Settings:
    tolerance: float = 1e-9
    max_order: int = 2000
    samples: int = 1_000_000
    seed: int = 20240601
    z: float = 5.0
    workers: int = 1
    chunk_size: int = 100_000
    log_level: str = "WARNING"
    mode: str = "exact"
    mc: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        if self.z <= 0:
            raise ConfigError(f"z must be positive, got {self.z}")
        for name in ("max_order", "samples", "workers", "chunk_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigError(f"unknown log level {self.log_level!r}")

    def updated(self, **overrides: Any) -> "Settings":
        """Copy with every non-None override applied"""
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _env_value(name: str, kind: type) -> Any:
    raw = os.getenv(ENV_PREFIX + name.upper())
    if raw is None or raw.strip() == "":
        return None
    try:
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"{ENV_PREFIX}{name.upper()}: cannot parse {raw!r}") from None


def _env_flag(name: str) -> Optional[bool]:
    raw = os.getenv(ENV_PREFIX + name.upper())
    if raw is None or raw.strip() == "":
        return None
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{ENV_PREFIX}{name.upper()}: expected true or false, got {raw!r}")


def load_settings(env_file: Optional[str] = None) -> Settings:
    """Defaults overlaid with .env and SUMVERIFY_* environment variables"""
    # Variables already set in the process environment win over the .env file
    load_dotenv(env_file)
    overrides = {
        "tolerance": _env_value("tolerance", float),
        "max_order": _env_value("max_order", int),
        "samples": _env_value("samples", int),
        "seed": _env_value("seed", int),
        "z": _env_value("z", float),
        "workers": _env_value("workers", int),
        "chunk_size": _env_value("chunk_size", int),
        "log_level": _env_value("log_level", str),
        "mode": _env_value("mode", str),
        "mc": _env_flag("mc"),
    }
    found = {k: v for k, v in overrides.items() if v is not None}
    if found:
        logger.debug("settings from environment: %s", found)
    return Settings().updated(**found)


@dataclass(frozen=True)
class SweepRun:
    """One identity and its parameter grid; grid values are lists of CLI-style tokens"""

    identity_id: str
    grid: Dict[str, Tuple[str, ...]]
    rhs_offset: Optional[Fraction] = None

    def points(self) -> Iterator[Dict[str, str]]:
        """Cartesian product of the grid in key order"""
        keys = list(self.grid)
        for values in itertools.product(*(self.grid[k] for k in keys)):
            yield dict(zip(keys, values))

    @property
    def size(self) -> int:
        total = 1
        for values in self.grid.values():
            total *= len(values)
        return total


@dataclass(frozen=True)
class SweepConfig:
    runs: Tuple[SweepRun, ...]
    overrides: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    source: Optional[str] = None


def expand_tokens(value: Any, key: str) -> Tuple[str, ...]:
    """
    Grid entry -> tokens. A string or number is one token, "lo..hi" expands
    to the inclusive integer range and a list concatenates its entries.
    """
    items = value if isinstance(value, list) else [value]
    tokens: List[str] = []
    for item in items:
        if isinstance(item, bool) or not isinstance(item, (str, int, float)):
            raise ConfigError(f"grid {key!r}: unsupported entry {item!r}")
        text = str(item).strip()
        match = RANGE_TOKEN.match(text)
        if match:
            lo, hi = int(match.group(1)), int(match.group(2))
            if hi < lo:
                raise ConfigError(f"grid {key!r}: empty range {text!r}")
            tokens.extend(str(v) for v in range(lo, hi + 1))
        elif text:
            tokens.append(text)
    if not tokens:
        raise ConfigError(f"grid {key!r} is empty")
    return tuple(tokens)


def _settings_overrides(data: Dict[str, Any]) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if "mode" in data:
        overrides["mode"] = data["mode"]
    if "tolerance" in data:
        overrides["tolerance"] = float(data["tolerance"])
    if "max_order" in data:
        overrides["max_order"] = int(data["max_order"])
    if "workers" in data:
        overrides["workers"] = int(data["workers"])
    mc = data.get("monte_carlo") or {}
    if not isinstance(mc, dict):
        raise ConfigError("monte_carlo must be an object")
    if "enabled" in mc:
        overrides["mc"] = bool(mc["enabled"])
    for key, kind in (("samples", int), ("seed", int), ("z", float), ("chunk_size", int)):
        if key in mc:
            overrides[key] = kind(mc[key])
    return overrides


def load_sweep_config(path: str, known_ids: Iterable[str]) -> SweepConfig:
    """Parse and validate a sweep config; every problem raises ConfigError"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")

    known = set(known_ids)
    raw_runs = data.get("runs")
    if not isinstance(raw_runs, list) or not raw_runs:
        raise ConfigError(f"{path}: 'runs' must be a non-empty list")

    runs = []
    for index, raw in enumerate(raw_runs):
        if not isinstance(raw, dict):
            raise ConfigError(f"run {index}: must be an object")
        identity_id = raw.get("identity")
        if identity_id not in known:
            raise ConfigError(f"run {index}: unknown identity {identity_id!r}")
        grid = raw.get("grid")
        if not isinstance(grid, dict):
            raise ConfigError(f"run {index} ({identity_id}): 'grid' must be an object")
        expanded = {key: expand_tokens(value, key) for key, value in grid.items()}
        offset = raw.get("rhs_offset")
        runs.append(SweepRun(
            identity_id=identity_id,
            grid=expanded,
            rhs_offset=None if offset is None else to_rational(offset, "rhs_offset"),
        ))

    try:
        overrides = _settings_overrides(data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None
    outputs = data.get("outputs") or {}
    if not isinstance(outputs, dict) or any(not isinstance(v, str) for v in outputs.values()):
        raise ConfigError(f"{path}: 'outputs' must map names to paths")

    logger.info("loaded %d runs (%d grid points) from %s", len(runs), sum(r.size for r in runs), path)
    return SweepConfig(tuple(runs), overrides, dict(outputs), path)
