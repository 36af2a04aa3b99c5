"""Price-sensitive EV charging demand for a residential/commercial network pair.

Hourly demand in one area is the share of the day's EV energy present in that
area, weighted by an own-price sensitivity term and a cross-price term that
pulls vehicles toward the cheaper neighbouring network.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import DegeneratePrices, ShapeMismatch

Area = Literal["res", "com"]
PRICE_DEDUP_TOL = 1e-9
HOURS = 24


@dataclass(frozen=True)
class CommuteDistribution:
    rho_res: np.ndarray
    rho_com: np.ndarray

    def __post_init__(self):
        for name in ("rho_res", "rho_com"):
            rho = np.asarray(getattr(self, name), dtype=float)
            if rho.shape != (HOURS,):
                raise ShapeMismatch(f"{name} must have 24 entries")
            if np.any(rho < 0) or abs(rho.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} must be non-negative and sum to 1")
            object.__setattr__(self, name, rho)

    def rho(self, area: Area) -> np.ndarray:
        return self.rho_res if area == "res" else self.rho_com


@dataclass(frozen=True)
class DemandParams:
    c1: float = 1.0
    c2: float = 1.0
    kappa: float = 0.5
    g_mean: float = 1.0e5
    g_std: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if min(self.c1, self.c2, self.g_mean, self.g_std) < 0:
            raise ValueError("c1, c2, g_mean and g_std must be non-negative")


def unique_price_sum(res, com, tol: float = PRICE_DEDUP_TOL) -> float:
    """Sum of the distinct values among both networks' 48 hourly prices."""
    prices = np.sort(np.concatenate([np.ravel(res), np.ravel(com)]).astype(float))
    if prices.size == 0:
        raise DegeneratePrices("no prices given")
    if np.any(prices < 0):
        raise ValueError("prices must be non-negative")
    keep = np.ones(prices.size, dtype=bool)
    last = prices[0]
    for i in range(1, prices.size):
        if prices[i] - last <= tol:
            keep[i] = False
        else:
            last = prices[i]
    total = float(prices[keep].sum())
    if total <= 0:
        raise DegeneratePrices("sum of unique prices is zero")
    return total


def demand_hour(
    area: Area,
    t: int,
    rho_t,
    g,
    own_price,
    other_price,
    p_tot: float,
    params: DemandParams,
):
    """Charging demand (kWh) in ``area`` at hour ``t``; vectorizes over arrays.

    The formula is the same for both areas once prices are passed as
    (own, other); ``area`` and ``t`` are carried for traceability only.
    """
    if p_tot <= 0:
        raise DegeneratePrices("p_tot must be positive")
    bracket = params.kappa * params.c1 * (1.0 - np.asarray(own_price) / p_tot) + (
        1.0 - params.kappa
    ) * params.c2 * (np.asarray(other_price) - np.asarray(own_price))
    y = np.asarray(rho_t) * np.asarray(g) * bracket
    return np.maximum(y, 0.0)


def hourly_weights(prices_res, prices_com, dist: CommuteDistribution, params_res, params_com):
    """Per-unit-energy demand profiles, i.e. demand_day with g = 1 for both areas."""
    p_res = np.asarray(prices_res, dtype=float)
    p_com = np.asarray(prices_com, dtype=float)
    p_tot = unique_price_sum(p_res, p_com)
    hours = np.arange(HOURS)
    w_res = demand_hour("res", hours, dist.rho_res, 1.0, p_res, p_com, p_tot, params_res)
    w_com = demand_hour("com", hours, dist.rho_com, 1.0, p_com, p_res, p_tot, params_com)
    return w_res, w_com


def sample_daily_energy(params: DemandParams, rng: np.random.Generator) -> float:
    if params.g_std == 0:
        return params.g_mean
    # Truncation at zero by resampling; falls back to 0 in the pathological case.
    for _ in range(100):
        g = rng.normal(params.g_mean, params.g_std)
        if g >= 0:
            return float(g)
    return 0.0


def demand_day(
    prices_res,
    prices_com,
    dist: CommuteDistribution,
    params_res: DemandParams,
    params_com: DemandParams,
    seed: int | np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """EV demand for one day in both areas under the given 24-hour prices."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g_res = sample_daily_energy(params_res, rng)
    g_com = sample_daily_energy(params_com, rng)
    w_res, w_com = hourly_weights(prices_res, prices_com, dist, params_res, params_com)
    return g_res * w_res, g_com * w_com


def default_commute() -> CommuteDistribution:
    """Built-in hourly EV presence for charging in each area.

    Residential presence builds from the late afternoon, peaks late in the
    evening and stays high overnight; commercial presence follows working
    and shopping hours.
    """
    # Vehicles present at any hour contribute a floor; commute peaks sit on top.
    res = 3.0 + np.array([
        6.0, 6.0, 6.0, 5.5, 5.0, 4.5, 3.5, 2.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5,
    ])
    com = 8.0 + np.array([
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 2.0, 5.0, 7.0, 8.0, 8.5,
        8.5, 8.5, 8.2, 8.0, 7.5, 6.5, 4.0, 2.0, 0.5, 0.0, 0.0, 0.0,
    ])
    return CommuteDistribution(rho_res=res / res.sum(), rho_com=com / com.sum())


EV_FEATURES = ("rho", "price_own", "price_other", "price_own_over_ptot")
EV_CSV_HEADER = ("day", "hour", "area", "rho", "price_own", "price_other", "p_tot", "g", "demand_kwh")


@dataclass
class EvDataset:
    """Flat hourly EV demand table for both areas."""

    day: np.ndarray
    hour: np.ndarray
    area: np.ndarray  # "res" / "com"
    rho: np.ndarray
    price_own: np.ndarray
    price_other: np.ndarray
    p_tot: np.ndarray
    g: np.ndarray
    demand: np.ndarray

    def features(self, area: Area | None = None) -> np.ndarray:
        mask = self._mask(area)
        return np.column_stack([
            self.rho[mask], self.price_own[mask], self.price_other[mask],
            self.price_own[mask] / self.p_tot[mask],
        ])

    def target(self, area: Area | None = None) -> np.ndarray:
        return self.demand[self._mask(area)]

    def _mask(self, area):
        return np.ones(self.day.size, dtype=bool) if area is None else self.area == area

    def __len__(self):
        return int(self.day.size)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EV_CSV_HEADER)
            for i in range(self.day.size):
                w.writerow([
                    int(self.day[i]), int(self.hour[i]), self.area[i],
                    repr(float(self.rho[i])), repr(float(self.price_own[i])),
                    repr(float(self.price_other[i])), repr(float(self.p_tot[i])),
                    repr(float(self.g[i])), repr(float(self.demand[i])),
                ])


def random_price_days(days: int, base, rng: np.random.Generator, scale: float = 0.6):
    """Per-day dynamic schedules: ``base`` plus a random non-negative increment."""
    base = np.asarray(base, dtype=float)
    res = base + scale * rng.random((days, HOURS))
    com = base + scale * rng.random((days, HOURS))
    return res, com


def synth_ev_dataset(
    days: int,
    prices: tuple[np.ndarray, np.ndarray],
    dist: CommuteDistribution,
    params_res: DemandParams,
    params_com: DemandParams,
    seed: int,
) -> EvDataset:
    """Hourly EV demand records for ``days`` days (24 rows per area per day).

    ``prices`` is a pair of (days, 24) arrays of residential and commercial
    schedules. Rows are ordered day-major so a chronological split is a
    plain slice.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    p_res_all, p_com_all = (np.asarray(p, dtype=float) for p in prices)
    if p_res_all.shape != (days, HOURS) or p_com_all.shape != (days, HOURS):
        raise ShapeMismatch("prices must be two (days, 24) arrays")
    rng = np.random.default_rng(seed)
    cols: dict[str, list] = {k: [] for k in ("day", "hour", "area", "rho", "own", "other", "ptot", "g", "y")}
    hours = np.arange(HOURS)
    for d in range(days):
        p_res, p_com = p_res_all[d], p_com_all[d]
        p_tot = unique_price_sum(p_res, p_com)
        g_res = sample_daily_energy(params_res, rng)
        g_com = sample_daily_energy(params_com, rng)
        w_res, w_com = hourly_weights(p_res, p_com, dist, params_res, params_com)
        y_res, y_com = g_res * w_res, g_com * w_com
        for area, rho, own, other, g, y in (
            ("res", dist.rho_res, p_res, p_com, g_res, y_res),
            ("com", dist.rho_com, p_com, p_res, g_com, y_com),
        ):
            cols["day"].append(np.full(HOURS, d))
            cols["hour"].append(hours)
            cols["area"].append(np.full(HOURS, area))
            cols["rho"].append(rho)
            cols["own"].append(own)
            cols["other"].append(other)
            cols["ptot"].append(np.full(HOURS, p_tot))
            cols["g"].append(np.full(HOURS, g))
            cols["y"].append(y)
    cat = {k: np.concatenate(v) for k, v in cols.items()}
    return EvDataset(
        day=cat["day"], hour=cat["hour"], area=cat["area"], rho=cat["rho"],
        price_own=cat["own"], price_other=cat["other"], p_tot=cat["ptot"], g=cat["g"],
        demand=cat["y"],
    )


def split_by_day(ds: EvDataset, train_fraction: float = 0.8) -> tuple[EvDataset, EvDataset]:
    """Chronological train/validation split on whole days."""
    n_days = int(ds.day.max()) + 1
    cut = int(round(train_fraction * n_days))
    train = ds.day < cut
    pick = lambda m: EvDataset(**{k: getattr(ds, k)[m] for k in ds.__dataclass_fields__})  # noqa: E731
    return pick(train), pick(~train)
