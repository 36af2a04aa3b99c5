"""Day-ahead pricing environment for two neighbouring distribution networks.

One episode step is one day. Each network agent observes the day-ahead total
load forecast of its own network (min-max scaled) and the scaled utilization
difference to the neighbour, and answers with 24 non-negative hourly price
increments in [0, 1]. The operator maps increments to currency with a fixed
scale on top of the conventional tariff.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np

from . import evdemand
from .errors import ConstantFeature, ShapeMismatch
from .evdemand import HOURS, CommuteDistribution, DemandParams

NETWORKS = ("res", "com")
# 1 GW sustained for one hour is 1e6 kWh; capacities are stored in kWh per hour.
KWH_PER_GW_HOUR = 1.0e6
DEFAULT_CAPACITIES = (0.9 * KWH_PER_GW_HOUR, 1.0 * KWH_PER_GW_HOUR)


@dataclass
class NetworkDay:
    conv_load: np.ndarray
    ev_load: np.ndarray
    capacity: float

    def __post_init__(self):
        self.conv_load = np.asarray(self.conv_load, dtype=float)
        self.ev_load = np.asarray(self.ev_load, dtype=float)
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if self.conv_load.shape != self.ev_load.shape:
            raise ShapeMismatch("conv_load and ev_load differ in length")

    @property
    def total(self) -> np.ndarray:
        return self.conv_load + self.ev_load

    @property
    def utilization(self) -> np.ndarray:
        return self.total / self.capacity

    @property
    def violations(self) -> int:
        return int(np.count_nonzero(self.total > self.capacity))


@dataclass(frozen=True)
class RewardWeights:
    omega1: float = 0.5
    omega2: float = 0.5

    def __post_init__(self):
        if self.omega1 < 0 or self.omega2 < 0 or abs(self.omega1 + self.omega2 - 1.0) > 1e-9:
            raise ValueError("reward weights must be non-negative and sum to 1")


PV_WEIGHTS = RewardWeights(1.0, 0.0)


@dataclass
class DayState:
    norm_load: np.ndarray
    util_gap: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.norm_load, self.util_gap])


STATE_DIM = 2 * HOURS
ACTION_DIM = HOURS


def normalize_day(load) -> np.ndarray:
    load = np.asarray(load, dtype=float)
    lo, hi = load.min(), load.max()
    if hi == lo:
        raise ConstantFeature("flat daily profile cannot be min-max scaled")
    return (load - lo) / (hi - lo)


def _scaled_or_zero(values: np.ndarray) -> np.ndarray:
    try:
        return normalize_day(values)
    except ConstantFeature:
        return np.zeros_like(values, dtype=float)


def signed_gap(day: NetworkDay, other: NetworkDay) -> np.ndarray:
    """Own utilization minus the neighbour's, hour by hour."""
    return day.utilization - other.utilization


def observe(day: NetworkDay, other: NetworkDay) -> DayState:
    return DayState(norm_load=_scaled_or_zero(day.total), util_gap=_scaled_or_zero(signed_gap(day, other)))


def congestion_flags(day: NetworkDay, other: NetworkDay, mode: Literal["hour", "day"] = "hour") -> np.ndarray:
    gap = signed_gap(day, other)
    if mode == "hour":
        return gap > 0
    if mode == "day":
        return np.full(gap.shape, gap.mean() > 0)
    raise ValueError(f"unknown congestion mode {mode!r}")


def target_actions(
    day: NetworkDay,
    other: NetworkDay,
    c_a: float = 1.0,
    c_b: float = 1.0,
    gap_norm: Literal["minmax", "positive", "identity"] = "minmax",
) -> tuple[np.ndarray, np.ndarray]:
    """Price-increment targets for peak-shaving (a) and balancing (b).

    ``delta_a`` follows the own load profile scaled to [0, 1]. ``delta_b``
    follows the utilization difference where the own network is the more
    utilized one and is zero elsewhere. With ``gap_norm="minmax"`` the
    difference is scaled over the day first, otherwise it is used as is.
    """
    delta_a = c_a * _scaled_or_zero(day.total)
    gap = signed_gap(day, other)
    if gap_norm == "minmax":
        level = _scaled_or_zero(gap)
    elif gap_norm == "positive":
        pos = np.maximum(gap, 0.0)
        peak = pos.max()
        level = pos / peak if peak > 0 else pos
    elif gap_norm == "identity":
        level = gap
    else:
        raise ValueError(f"unknown gap_norm {gap_norm!r}")
    delta_b = np.where(gap > 0, c_b * level, 0.0)
    return delta_a, delta_b


def reward_terms(action, delta_a, delta_b, congested, w: RewardWeights) -> np.ndarray:
    """Per-hour reward contributions; their sum is the day's reward."""
    action = np.asarray(action, dtype=float)
    miss_a = np.abs(action - delta_a)
    miss_b = np.abs(action - delta_b)
    return np.where(congested, -w.omega1 * miss_a - w.omega2 * miss_b, -miss_a)


def reward(action, delta_a, delta_b, congested, w: RewardWeights) -> float:
    for v in (action, delta_a, delta_b, congested):
        if np.shape(v) != (HOURS,):
            raise ShapeMismatch("reward inputs must all have 24 entries")
    return float(reward_terms(action, delta_a, delta_b, congested, w).sum())


@dataclass
class EnvConfig:
    capacities: tuple[float, float] = DEFAULT_CAPACITIES
    weights: RewardWeights = field(default_factory=RewardWeights)
    balance: bool = True
    gap_norm: Literal["minmax", "positive", "identity"] = "minmax"
    congestion: Literal["hour", "day"] = "hour"
    price_scale: float = 0.6
    # One level, or several drawn uniformly at every reset.
    penetration: float | tuple[float, ...] | None = 0.3
    load_noise: float = 0.0
    horizon: int = 1

    def pv(self) -> "EnvConfig":
        """Same setting with the balancing component switched off."""
        return replace(self, balance=False, weights=PV_WEIGHTS)


def penetration_energy(conv, weights, fraction: float) -> float:
    """Constant daily EV energy giving EV charging a share ``fraction`` of all energy.

    ``conv`` and ``weights`` are (days, 24): conventional load and per-unit
    EV demand profiles. Demand is linear in the daily energy, so the share
    is met exactly over the given days.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("penetration must lie in [0, 1)")
    w_total = float(np.sum(weights))
    if w_total <= 0:
        return 0.0
    return fraction / (1.0 - fraction) * float(np.sum(conv)) / w_total


class PricingEnv:
    """Two-network day-ahead pricing environment.

    ``conv_res`` and ``conv_com`` are (days, 24) conventional load arrays in
    kWh per hour. ``base_prices`` is the 24-hour conventional tariff that
    agent increments are added to.
    """

    state_dim = STATE_DIM
    action_dim = ACTION_DIM

    def __init__(
        self,
        conv_res,
        conv_com,
        base_prices,
        dist: CommuteDistribution,
        params_res: DemandParams,
        params_com: DemandParams,
        config: EnvConfig | None = None,
        seed: int = 0,
    ):
        self.conv = (np.asarray(conv_res, dtype=float), np.asarray(conv_com, dtype=float))
        if self.conv[0].shape != self.conv[1].shape or self.conv[0].shape[1:] != (HOURS,):
            raise ShapeMismatch("conventional loads must be two (days, 24) arrays")
        self.base_prices = np.asarray(base_prices, dtype=float)
        self.dist = dist
        self.params = (params_res, params_com)
        self.config = config or EnvConfig()
        self.rng = np.random.default_rng(seed)
        self.n_days = self.conv[0].shape[0]
        self.day_index = 0
        self._steps = 0
        self._expected_prices = (self.base_prices, self.base_prices)
        self._forecast: tuple[NetworkDay, NetworkDay] | None = None
        levels = self.levels
        self.set_level(None if levels is None else levels[0])

    # -- demand -------------------------------------------------------------
    @property
    def levels(self) -> tuple[float, ...] | None:
        f = self.config.penetration
        if f is None:
            return None
        return tuple(float(v) for v in np.atleast_1d(f))

    def _energy_for(self, f: float | None) -> tuple[float, float]:
        """Per-area EV energy per day (kWh) under the base tariff.

        With a penetration level ``f`` the energy is fixed once for the whole
        horizon so that EV charging makes up ``f`` of each network's energy
        when the base tariff applies. Without one, ``g_mean`` is used.
        """
        if f is None:
            return self.params[0].g_mean, self.params[1].g_mean
        w = evdemand.hourly_weights(self.base_prices, self.base_prices, self.dist, *self.params)
        return tuple(
            penetration_energy(conv, np.tile(wk, (conv.shape[0], 1)), f)
            for conv, wk in zip(self.conv, w)
        )

    def set_level(self, f: float | None) -> None:
        self.level = f
        self.daily_energy = self._energy_for(f)

    def ev_loads(self, prices_res, prices_com, rng=None):
        """EV demand in both networks; ``rng=None`` gives the expected demand."""
        w = evdemand.hourly_weights(prices_res, prices_com, self.dist, *self.params)
        out = []
        for wk, g, params in zip(w, self.daily_energy, self.params):
            if rng is not None and params.g_std > 0 and params.g_mean > 0:
                g = g * evdemand.sample_daily_energy(params, rng) / params.g_mean
            out.append(g * wk)
        return out[0], out[1]

    def network_days(self, day_index, prices_res, prices_com, rng=None) -> tuple[NetworkDay, NetworkDay]:
        conv_res, conv_com = (c[day_index] for c in self.conv)
        if rng is not None and self.config.load_noise > 0:
            conv_res = conv_res * (1 + self.config.load_noise * rng.standard_normal(HOURS))
            conv_com = conv_com * (1 + self.config.load_noise * rng.standard_normal(HOURS))
            conv_res, conv_com = np.maximum(conv_res, 0), np.maximum(conv_com, 0)
        ev_res, ev_com = self.ev_loads(prices_res, prices_com, rng)
        cap_res, cap_com = self.config.capacities
        return NetworkDay(conv_res, ev_res, cap_res), NetworkDay(conv_com, ev_com, cap_com)

    @property
    def forecast(self) -> tuple[NetworkDay, NetworkDay] | None:
        """Expected day under the prices assumed at reset; the agents observe this."""
        return self._forecast

    # -- MDP ----------------------------------------------------------------
    def states(self, days: tuple[NetworkDay, NetworkDay]) -> tuple[np.ndarray, np.ndarray]:
        res, com = days
        return observe(res, com).vector(), observe(com, res).vector()

    def targets(self, days: tuple[NetworkDay, NetworkDay]):
        """((delta_a, delta_b, congested) for res, same for com)."""
        res, com = days
        cfg = self.config
        out = []
        for own, other in ((res, com), (com, res)):
            delta_a, delta_b = target_actions(own, other, gap_norm=cfg.gap_norm)
            if not cfg.balance:
                delta_b = np.zeros(HOURS)
            out.append((delta_a, delta_b, congestion_flags(own, other, cfg.congestion)))
        return tuple(out)

    def reset(self, day_index: int | None = None):
        if day_index is None:
            day_index = int(self.rng.integers(self.n_days))
        self.day_index = day_index % self.n_days
        levels = self.levels
        if levels is not None and len(levels) > 1:
            self.set_level(levels[int(self.rng.integers(len(levels)))])
        self._steps = 0
        self._expected_prices = (self.base_prices, self.base_prices)
        self._forecast = self.network_days(self.day_index, *self._expected_prices)
        return self.states(self._forecast)

    def prices(self, action_res, action_com):
        scale = self.config.price_scale
        return (
            self.base_prices + scale * np.clip(action_res, 0, 1),
            self.base_prices + scale * np.clip(action_com, 0, 1),
        )

    def step(self, action_res, action_com):
        """Apply both agents' increments to the current day.

        Rewards score the actions against the targets implied by the
        observed forecast. The realized day (EV demand re-evaluated under the
        new prices) is returned in ``info``; capacity overruns are counted,
        not clipped.
        """
        if self._forecast is None:
            raise RuntimeError("call reset() before step()")
        p_res, p_com = self.prices(action_res, action_com)
        realized = self.network_days(self.day_index, p_res, p_com, self.rng)
        cfg = self.config
        w = cfg.weights if cfg.balance else PV_WEIGHTS
        rewards, terms = [], []
        targets = self.targets(self._forecast)
        for action, (delta_a, delta_b, congested) in zip((action_res, action_com), targets):
            t = reward_terms(action, delta_a, delta_b, congested, w)
            terms.append(t)
            rewards.append(float(t.sum()))
        self._steps += 1
        done = self._steps >= cfg.horizon
        info = {
            "day": self.day_index,
            "prices": (p_res, p_com),
            "forecast": self._forecast,
            "realized": realized,
            "targets": targets,
            "reward_terms": tuple(terms),
            "violations": tuple(d.violations for d in realized),
        }
        if done:
            next_states = self.states(realized)
        else:
            # Tomorrow's forecast assumes today's prices persist.
            self.day_index = (self.day_index + 1) % self.n_days
            self._expected_prices = (p_res, p_com)
            self._forecast = self.network_days(self.day_index, p_res, p_com)
            next_states = self.states(self._forecast)
        return next_states, tuple(rewards), done, info


EPISODE_CSV_HEADER = (
    "day", "hour", "network", "conv_kwh", "ev_kwh", "total_kwh", "price",
    "delta_a", "delta_b", "reward_term", "violation",
)


def episode_rows(info: dict):
    for k, net in enumerate(NETWORKS):
        day = info["realized"][k]
        delta_a, delta_b, _ = info["targets"][k]
        price = info["prices"][k]
        terms = info["reward_terms"][k]
        for h in range(HOURS):
            yield (
                info["day"], h, net, repr(float(day.conv_load[h])), repr(float(day.ev_load[h])),
                repr(float(day.total[h])), repr(float(price[h])), repr(float(delta_a[h])),
                repr(float(delta_b[h])), repr(float(terms[h])), int(day.total[h] > day.capacity),
            )


def write_episode_csv(infos, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPISODE_CSV_HEADER)
        for info in infos:
            w.writerows(episode_rows(info))


# --- exogenous conventional loads ----------------------------------------------

# Retail/office feeder: late-morning rise, midday maximum, evening tail.
_COMMERCIAL_SHAPE = np.array([
    0.40, 0.38, 0.37, 0.36, 0.36, 0.38, 0.42, 0.48, 0.58, 0.76, 0.92, 1.00,
    1.00, 0.97, 0.88, 0.75, 0.62, 0.52, 0.47, 0.45, 0.44, 0.43, 0.42, 0.41,
])
_COMMERCIAL_WEEK = np.array([1.0, 1.0, 1.0, 1.0, 0.98, 0.82, 0.70])


def network_loads(
    hourly_power,
    day_of_week,
    temperature,
    seed: int,
    capacities: tuple[float, float] = DEFAULT_CAPACITIES,
    peak_utilization: tuple[float, float] = (0.65, 0.65),
    noise: float = 0.02,
):
    """Conventional (days, 24) loads for the residential and commercial network.

    The residential profile is the hourly feeder series rescaled so that its
    largest hour sits at ``peak_utilization`` of capacity. The commercial
    profile is synthesized from a working-hours shape with a weekly cycle and
    a temperature term driven by the same weather series.
    """
    power = np.asarray(hourly_power, dtype=float)
    n_days = power.size // HOURS
    if n_days == 0:
        raise ShapeMismatch("need at least one full day of hourly data")
    power = power[: n_days * HOURS].reshape(n_days, HOURS)
    dow = np.asarray(day_of_week)[: n_days * HOURS].reshape(n_days, HOURS)[:, 0]
    temp = np.asarray(temperature, dtype=float)[: n_days * HOURS].reshape(n_days, HOURS)

    res = power / power.max() * peak_utilization[0] * capacities[0]
    rng = np.random.default_rng(seed)
    com = (
        _COMMERCIAL_SHAPE[None, :]
        * _COMMERCIAL_WEEK[dow][:, None]
        * (1 + 0.01 * (temp - 18) + 0.005 * np.abs(temp - 18))
        * (1 + noise * rng.standard_normal((n_days, HOURS)))
    )
    com = com / com.max() * peak_utilization[1] * capacities[1]
    return res, com
