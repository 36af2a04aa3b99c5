"""Final EV charging prices and the ToU / PV / PVB scenario runner."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from . import dataio, evdemand
from .env import (
    DEFAULT_CAPACITIES, HOURS, NETWORKS, EnvConfig, NetworkDay, PricingEnv, RewardWeights,
    network_loads, penetration_energy,
)
from .errors import InvalidHour, MissingModel, ShapeMismatch
from .evdemand import CommuteDistribution, DemandParams
from .seeding import derive_seed

Strategy = Literal["TOU", "PV", "PVB"]
STRATEGIES = ("TOU", "PV", "PVB")

# (first hour, last hour inclusive, price per kWh)
TOU_BANDS = (
    (0, 6, 0.4),
    (7, 9, 0.7),
    (10, 14, 1.0),
    (15, 17, 0.7),
    (18, 20, 1.0),
    (21, 23, 0.7),
)


def tou_price(hour: int) -> float:
    if isinstance(hour, bool) or not isinstance(hour, (int, np.integer)) or not 0 <= hour < HOURS:
        raise InvalidHour(f"hour must be an integer in 0..23, got {hour!r}")
    for first, last, price in TOU_BANDS:
        if first <= hour <= last:
            return price
    raise AssertionError("ToU bands do not cover the day")  # pragma: no cover


def tou_schedule() -> np.ndarray:
    return np.array([tou_price(h) for h in range(HOURS)])


def compose_price(p_conv, delta_p_norm, scale: float):
    """p_conv + scale * delta; all inputs must be non-negative."""
    p_conv, delta = np.asarray(p_conv, dtype=float), np.asarray(delta_p_norm, dtype=float)
    if scale < 0 or np.any(p_conv < 0) or np.any(delta < 0):
        raise ValueError("prices, increments and scale must be non-negative")
    out = p_conv + scale * delta
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScenarioConfig:
    strategy: Strategy = "PVB"
    weights: RewardWeights = field(default_factory=RewardWeights)
    penetration: float = 0.3
    price_scale: float = 0.6
    calibration: Literal["window", "day"] = "window"

    def __post_init__(self):
        strategy = str(self.strategy).upper()
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        object.__setattr__(self, "strategy", strategy)
        if not 0.0 < self.penetration < 1.0:
            raise ValueError("penetration must lie in (0, 1)")
        if self.price_scale < 0:
            raise ValueError("price_scale must be non-negative")
        if self.calibration not in ("window", "day"):
            raise ValueError("calibration must be 'window' or 'day'")

    def env_config(self, capacities=DEFAULT_CAPACITIES) -> EnvConfig:
        cfg = EnvConfig(capacities=tuple(capacities), weights=self.weights, penetration=self.penetration,
                        price_scale=self.price_scale)
        return cfg.pv() if self.strategy == "PV" else cfg


@dataclass
class World:
    """Exogenous inputs shared by training and scenario runs."""

    conv_res: np.ndarray
    conv_com: np.ndarray
    dist: CommuteDistribution
    params_res: DemandParams
    params_com: DemandParams
    capacities: tuple[float, float] = DEFAULT_CAPACITIES
    base_prices: np.ndarray = field(default_factory=tou_schedule)

    @property
    def n_days(self) -> int:
        return int(self.conv_res.shape[0])

    def days(self, index) -> "World":
        return replace(self, conv_res=self.conv_res[index], conv_com=self.conv_com[index])

    def env(self, strategy: Strategy = "PVB", penetration=0.3, seed: int = 0,
            price_scale: float = 0.6, **env_overrides) -> PricingEnv:
        """Training environment; ``penetration`` may be a tuple of levels drawn per episode."""
        if str(strategy).upper() not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        cfg = EnvConfig(capacities=tuple(self.capacities), penetration=penetration, price_scale=price_scale)
        if str(strategy).upper() == "PV":
            cfg = cfg.pv()
        cfg = replace(cfg, **env_overrides)
        return PricingEnv(self.conv_res, self.conv_com, self.base_prices, self.dist, self.params_res,
                          self.params_com, cfg, seed=seed)


def world_from_hourly(records: Sequence[dataio.HourlyRecord], seed: int,
                      capacities=DEFAULT_CAPACITIES, dist: CommuteDistribution | None = None,
                      params_res: DemandParams | None = None, params_com: DemandParams | None = None) -> World:
    h, dow, weather, power = dataio.records_to_arrays(records)
    res, com = network_loads(power, dow, weather[:, 0], seed=derive_seed(seed, "network_loads"),
                             capacities=capacities)
    return World(res, com, dist or evdemand.default_commute(), params_res or DemandParams(),
                 params_com or DemandParams(), tuple(capacities))


def synthetic_world(days: int, seed: int, **kw) -> World:
    raw = dataio.synth_tetouan_like(days, derive_seed(seed, "feeder"))
    return world_from_hourly(dataio.downsample_hourly(raw), seed, **kw)


# -- scenario runs ----------------------------------------------------------------

TRACE_FIELDS = ("p_conv", "delta_a", "delta_b", "price", "conv_kwh", "ev_kwh", "total_kwh", "utilization")
SCENARIO_CSV_HEADER = ("scenario", "network", "hour") + TRACE_FIELDS


@dataclass
class ScenarioResult:
    """(days, 24) traces per network, keyed like ``SCENARIO_CSV_HEADER``."""

    config: ScenarioConfig
    traces: dict  # network -> field -> (days, 24)
    capacities: tuple[float, float]
    daily_energy: dict  # network -> (days,) EV energy

    def total(self, network: str) -> np.ndarray:
        return self.traces[network]["total_kwh"].ravel()

    def utilization(self, network: str) -> np.ndarray:
        return self.traces[network]["utilization"].ravel()

    def ev_fraction(self, network: str) -> float:
        t = self.traces[network]
        return float(t["ev_kwh"].sum() / t["total_kwh"].sum())

    def rows(self, label: str | None = None):
        label = label or self.config.strategy
        for net in NETWORKS:
            t = self.traces[net]
            n_days = t["price"].shape[0]
            for d in range(n_days):
                for h in range(HOURS):
                    yield (label, net, d * HOURS + h) + tuple(repr(float(t[k][d, h])) for k in TRACE_FIELDS)

    def write_csv(self, path, label: str | None = None) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCENARIO_CSV_HEADER)
            w.writerows(self.rows(label))


class TargetPolicy:
    """Reference policy that prices straight from the environment's targets.

    Uncongested hours get ``delta_a``. Congested hours get whichever target
    carries the larger reward weight; with equal weights every point between
    the two is optimal and the blend ``(1 - mix) * delta_a + mix * delta_b``
    is used.
    """

    uses_targets = True

    def __init__(self, mix: float = 0.5):
        if not 0.0 <= mix <= 1.0:
            raise ValueError("mix must lie in [0, 1]")
        self.mix = mix

    def act_on_targets(self, delta_a, delta_b, congested, weights: RewardWeights | None = None) -> np.ndarray:
        w = weights or RewardWeights()
        mix = self.mix if w.omega1 == w.omega2 else float(w.omega2 > w.omega1)
        blend = (1.0 - mix) * np.asarray(delta_a) + mix * np.asarray(delta_b)
        return np.where(congested, blend, delta_a)


def _choose(agent, state, target, weights) -> np.ndarray:
    if getattr(agent, "uses_targets", False):
        return agent.act_on_targets(*target, weights=weights)
    return agent.act(state, explore=False)


def run_scenario(config: ScenarioConfig, agents, world: World, seed: int = 0) -> ScenarioResult:
    """Price every day of ``world`` under one strategy and record the resulting loads.

    ToU needs no agents. PV and PVB need the pair of trained (residential,
    commercial) agents, which act greedily on the forecast state of each day.
    EV demand is the deterministic expectation; the daily EV energy is then
    scaled so that EV charging makes up exactly ``config.penetration`` of
    each network's energy, over the whole window (default) or day by day.
    """
    if config.strategy != "TOU" and (agents is None or len(agents) != 2 or any(a is None for a in agents)):
        raise MissingModel(f"strategy {config.strategy} needs trained residential and commercial agents")
    env = PricingEnv(world.conv_res, world.conv_com, world.base_prices, world.dist, world.params_res,
                     world.params_com, config.env_config(world.capacities), seed=seed)
    n = world.n_days
    deltas = np.zeros((2, n, HOURS, 2))  # network, day, hour, (a, b)
    actions = np.zeros((2, n, HOURS))
    weights = np.zeros((2, n, HOURS))
    for d in range(n):
        states = env.reset(d)
        targets = env.targets(env.forecast)
        for k, (ta, tb, _) in enumerate(targets):
            deltas[k, d, :, 0], deltas[k, d, :, 1] = ta, tb
        if config.strategy != "TOU":
            for k in range(2):
                actions[k, d] = np.clip(_choose(agents[k], states[k], targets[k], env.config.weights), 0.0, 1.0)
        prices = env.prices(actions[0, d], actions[1, d])
        weights[:, d] = evdemand.hourly_weights(*prices, world.dist, world.params_res, world.params_com)

    conv = np.stack([world.conv_res, world.conv_com])
    energy = np.zeros((2, n))
    for k in range(2):
        if config.calibration == "window":
            energy[k] = penetration_energy(conv[k], weights[k], config.penetration)
        else:
            energy[k] = [penetration_energy(conv[k, d], weights[k, d], config.penetration) for d in range(n)]

    traces, caps = {}, world.capacities
    for k, net in enumerate(NETWORKS):
        ev = energy[k][:, None] * weights[k]
        total = conv[k] + ev
        traces[net] = {
            "p_conv": np.tile(world.base_prices, (n, 1)),
            "delta_a": deltas[k, :, :, 0],
            "delta_b": deltas[k, :, :, 1],
            "price": world.base_prices + config.price_scale * actions[k],
            "conv_kwh": conv[k],
            "ev_kwh": ev,
            "total_kwh": total,
            "utilization": total / caps[k],
        }
    return ScenarioResult(config, traces, tuple(caps), {net: energy[k] for k, net in enumerate(NETWORKS)})


def network_days_from(result: ScenarioResult, day: int) -> tuple[NetworkDay, NetworkDay]:
    if not 0 <= day < result.traces["res"]["price"].shape[0]:
        raise ShapeMismatch("day out of range")
    return tuple(
        NetworkDay(result.traces[net]["conv_kwh"][day], result.traces[net]["ev_kwh"][day], result.capacities[k])
        for k, net in enumerate(NETWORKS)
    )
