"""Run configuration: one versioned JSON document drives every CLI command."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .agents.config import ALGORITHMS, AgentConfig
from .env import RewardWeights
from .errors import ConfigError, DataError
from .evaluation import gw_to_kwh_per_hour
from .evdemand import DemandParams
from .forecast.search import DEFAULT_GRIDS
from .pricing import STRATEGIES

CONFIG_VERSION = 1


@dataclass(frozen=True)
class ForecastSettings:
    grids: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_GRIDS)))
    split_fraction: float = 0.2
    ev_days: int = 365
    ev_degree: int = 2
    ev_train_fraction: float = 0.8


@dataclass(frozen=True)
class TrainingSettings:
    algorithm: str = "DDPG"
    episodes: int = 2000
    levels: tuple[float, ...] = (0.1, 0.2, 0.3)
    checkpoint_every: int = 100


@dataclass(frozen=True)
class RunConfig:
    seed: int
    version: int = CONFIG_VERSION
    dataset: str | None = None
    out: str = "out"
    synthetic_days: int = 365
    forecast: ForecastSettings = field(default_factory=ForecastSettings)
    demand_res: DemandParams = field(default_factory=DemandParams)
    demand_com: DemandParams = field(default_factory=DemandParams)
    rho_res: tuple[float, ...] | None = None
    rho_com: tuple[float, ...] | None = None
    agents: dict = field(default_factory=dict)  # algorithm -> AgentConfig overrides
    training: TrainingSettings = field(default_factory=TrainingSettings)
    scenarios: tuple[str, ...] = STRATEGIES
    compare_level: float = 0.3
    levels: tuple[float, ...] = (0.1, 0.2, 0.3)
    capacities_gw: tuple[float, float] = (0.9, 1.0)
    weights: RewardWeights = field(default_factory=RewardWeights)
    price_scale: float = 0.6
    calibration: str = "window"

    def __post_init__(self):
        if self.version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {self.version!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.synthetic_days < 1:
            raise ConfigError("synthetic_days must be positive")
        if len(self.capacities_gw) != 2 or min(self.capacities_gw) <= 0:
            raise ConfigError("capacities_gw needs two positive values")
        for lvl in (*self.levels, *self.training.levels, self.compare_level):
            if not 0.0 < lvl < 1.0:
                raise ConfigError("penetration levels must lie in (0, 1)")
        bad = [s for s in self.scenarios if s not in STRATEGIES]
        if bad:
            raise ConfigError(f"unknown scenarios {bad}")
        if self.calibration not in ("window", "day"):
            raise ConfigError("calibration must be 'window' or 'day'")
        if self.price_scale < 0:
            raise ConfigError("price_scale must be non-negative")
        if not 0.0 < self.forecast.split_fraction < 1.0 or not 0.0 < self.forecast.ev_train_fraction < 1.0:
            raise ConfigError("split fractions must lie in (0, 1)")
        if self.training.episodes < 1:
            raise ConfigError("training.episodes must be positive")
        if self.training.algorithm.upper() not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.training.algorithm!r}")
        unknown = set(self.agents) - {a.lower() for a in ALGORITHMS}
        if unknown:
            raise ConfigError(f"agent overrides for unknown algorithms {sorted(unknown)}")
        for algo in ALGORITHMS:
            self.agent_config(algo)  # validates overrides

    @property
    def capacities(self) -> tuple[float, float]:
        return tuple(gw_to_kwh_per_hour(c) for c in self.capacities_gw)

    def agent_config(self, algorithm: str) -> AgentConfig:
        overrides = dict(self.agents.get(algorithm.lower(), {}))
        overrides["algorithm"] = algorithm.upper()
        return AgentConfig.from_dict(overrides)

    def check_paths(self) -> None:
        """Referenced input files must exist; raises DataError naming the path."""
        if self.dataset is not None and not Path(self.dataset).is_file():
            raise DataError(f"dataset not found: {self.dataset}")

    def to_dict(self) -> dict:
        d = asdict(self)
        return json.loads(json.dumps(d))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        if "seed" not in d:
            raise ConfigError("config needs an explicit seed")
        _reject_unknown(cls, d, "config")
        try:
            if "forecast" in d:
                _reject_unknown(ForecastSettings, d["forecast"], "forecast")
                d["forecast"] = ForecastSettings(**d["forecast"])
            if "training" in d:
                _reject_unknown(TrainingSettings, d["training"], "training")
                t = dict(d["training"])
                if "levels" in t:
                    t["levels"] = tuple(t["levels"])
                d["training"] = TrainingSettings(**t)
            for key in ("demand_res", "demand_com"):
                if key in d:
                    _reject_unknown(DemandParams, d[key], key)
                    d[key] = DemandParams(**d[key])
            if "weights" in d:
                d["weights"] = RewardWeights(**d["weights"])
            for key in ("rho_res", "rho_com", "levels", "capacities_gw", "scenarios"):
                if d.get(key) is not None:
                    d[key] = tuple(d[key])
            if "scenarios" in d:
                d["scenarios"] = tuple(str(s).upper() for s in d["scenarios"])
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _reject_unknown(cls, d, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = set(d) - {f.name for f in fields(cls)}
    if extra:
        raise ConfigError(f"unknown {where} keys: {sorted(extra)}")


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(doc)
