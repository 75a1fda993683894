"""Experiment configuration: defaults, key = value files and validation."""

import logging
import os
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

from walsh.dyadic_core import Grid
from walsh.errors import WalshError

logger = logging.getLogger(__name__)

MAX_GRID_BITS = 14
CALIB_ENV = "WALSH_TF_CALIB"
DEFAULT_CALIB = "calibration.json"


class ConfigError(WalshError):
    """Malformed configuration file or invalid parameter combination."""


class Experiment(str, Enum):
    JUMP = "jump"
    VARIATION = "variation"
    SIZE_BOUND = "size-bound"
    BESSEL = "bessel"
    BOURGAIN = "bourgain"
    TREE_POINTWISE = "tree-pointwise"
    WEAK_TYPE = "weak-type"
    ORACLE_CROSSCHECK = "oracle-crosscheck"


# (gridJ, gridK) used when neither the file nor the flags pick a grid
DEFAULT_GRIDS: Dict[Experiment, Tuple[int, int]] = {
    Experiment.JUMP: (5, 5),
    Experiment.VARIATION: (5, 5),
    Experiment.SIZE_BOUND: (3, 3),
    Experiment.BESSEL: (3, 3),
    Experiment.BOURGAIN: (3, 3),
    Experiment.TREE_POINTWISE: (3, 3),
    Experiment.WEAK_TYPE: (3, 4),
    Experiment.ORACLE_CROSSCHECK: (1, 2),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    grid_j: int
    grid_k: int
    seed: int = 0
    trials: int = 20
    r: float = 2.5
    p: Optional[float] = None
    out_path: Optional[str] = None
    calibrate: bool = False
    calib_path: str = DEFAULT_CALIB
    workers: int = 1
    restarts: int = 8
    headroom: float = 1.25

    @classmethod
    def for_experiment(cls, experiment: Experiment, **values: Any) -> "ExperimentConfig":
        experiment = Experiment(experiment)
        grid_j, grid_k = DEFAULT_GRIDS[experiment]
        base = cls(experiment, grid_j, grid_k)
        return replace(base, **values) if values else base

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_j, self.grid_k)

    def metric_key(self, metric: str) -> str:
        """Calibration key, e.g. 'jump/ratio@J5K5'."""
        return f"{self.experiment.value}/{metric}@J{self.grid_j}K{self.grid_k}"

    def validate(self) -> "ExperimentConfig":
        if self.grid_j < 0 or self.grid_k < 0:
            raise ConfigError("grid exponents must be nonnegative")
        if self.grid_j + self.grid_k > MAX_GRID_BITS:
            raise ConfigError(f"gridJ + gridK must not exceed {MAX_GRID_BITS}, got {self.grid_j + self.grid_k}")
        if not self.r > 2:
            raise ConfigError(f"r must exceed 2, got {self.r}")
        if self.p is not None and not self.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.p}")
        if self.trials < 0:
            raise ConfigError("trials must be nonnegative")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.headroom < 1:
            raise ConfigError("headroom must be at least 1")
        return self


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_ALIASES = {"out": "out_path", "calib": "calib_path", "gridj": "grid_j", "gridk": "grid_k"}


def _normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return _ALIASES.get(key, key)


def _convert(name: str, raw: str) -> Any:
    kind = _FIELD_TYPES[name]
    try:
        if kind is int:
            return int(raw, 0)
        if kind in (float, Optional[float]):
            return float(raw)
        if kind is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(raw)
            return lowered in ("true", "yes", "1")
        if kind is Experiment:
            return Experiment(raw)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {name}") from None
    return raw


def load_config_file(path: str) -> Dict[str, Any]:
    """Parse 'key = value' lines; '#' starts a comment."""
    values: Dict[str, Any] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        name = _normalize_key(key)
        if name not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[name] = _convert(name, value)
    logger.debug("loaded %d settings from %s", len(values), path)
    return values


def build_config(
    experiment: Experiment,
    file_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Defaults, then the config file, then explicitly given flags.

    The calibration path falls back to $WALSH_TF_CALIB before the default.
    An 'experiment' key in the file must name the experiment being run.
    """
    experiment = Experiment(experiment)
    values: Dict[str, Any] = {}
    env_calib = os.environ.get(CALIB_ENV)
    if env_calib:
        values["calib_path"] = env_calib
    if file_path:
        values.update(load_config_file(file_path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    named = values.pop("experiment", experiment)
    if Experiment(named) is not experiment:
        raise ConfigError(f"config file is for {Experiment(named).value}, not {experiment.value}")
    return ExperimentConfig.for_experiment(experiment, **values).validate()
