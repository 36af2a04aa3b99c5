"""Load statistics, density curves, utilization gaps and penetration sweeps."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateDensity, EmptyData, ShapeMismatch

KWH_PER_GW_HOUR = 1.0e6  # 1 GW sustained for one hour
KDE_POINTS = 256


def gw_to_kwh_per_hour(gw: float) -> float:
    return gw * KWH_PER_GW_HOUR


@dataclass(frozen=True)
class LoadStats:
    mean: float
    std: float
    min: float
    max: float
    violation_hours: int


def load_stats(trace, capacity: float) -> LoadStats:
    """Summary of an hourly load trace. ``std`` is the sample (n - 1) deviation."""
    x = np.asarray(trace, dtype=float).ravel()
    if x.size == 0:
        raise EmptyData("empty load trace")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return LoadStats(float(x.mean()), std, float(x.min()), float(x.max()), int(np.sum(x > capacity)))


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid)) if hasattr(np, "trapezoid") \
            else float(np.trapz(self.density, self.grid))


def scott_bandwidth(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) * x.size ** (-1.0 / 5.0))


def kde(trace, bandwidth: float | None = None) -> DensityCurve:
    """Gaussian kernel density on 256 points over [min - 3h, max + 3h]."""
    x = np.asarray(trace, dtype=float).ravel()
    if x.size < 2 or np.ptp(x) == 0:
        raise DegenerateDensity("density needs at least two distinct values")
    h = scott_bandwidth(x) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, KDE_POINTS)
    z = (grid[:, None] - x[None, :]) / h
    dens = np.exp(-0.5 * z ** 2).sum(axis=1) / (x.size * h * np.sqrt(2 * np.pi))
    return DensityCurve(grid, dens, h)


def utilization_gap(trace_res, cap_res: float, trace_com, cap_com: float) -> float:
    """Mean over hours of |l_res / cap_res - l_com / cap_com|."""
    a = np.asarray(trace_res, dtype=float).ravel()
    b = np.asarray(trace_com, dtype=float).ravel()
    if a.shape != b.shape:
        raise ShapeMismatch("traces differ in length")
    if a.size == 0:
        raise EmptyData("empty traces")
    return float(np.mean(np.abs(a / cap_res - b / cap_com)))


def hourly_profile(trace) -> np.ndarray:
    """Mean load per hour of day for a (days, 24) or flat day-major trace."""
    return np.asarray(trace, dtype=float).reshape(-1, 24).mean(axis=0)


@dataclass(frozen=True)
class SweepRow:
    level: float
    network: str
    stats: LoadStats


def penetration_sweep(levels: Sequence[float], runner: Callable[[float], object],
                      networks: Sequence[str] = ("res", "com")) -> list[SweepRow]:
    """Run ``runner(level)`` (a PVB scenario run) for each level and summarize every network.

    ``runner`` must return an object with ``total(network)`` and ``capacities``.
    """
    rows = []
    for level in levels:
        if not 0.0 < level < 1.0:
            raise ValueError("penetration levels must lie in (0, 1)")
        result = runner(level)
        for k, net in enumerate(networks):
            rows.append(SweepRow(level, net, load_stats(result.total(net), result.capacities[k])))
    return rows


# -- plot-data files ----------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("level", "network", "mean", "std", "min", "max", "violation_hours"))
        for r in rows:
            s = r.stats
            w.writerow((_fmt(r.level), r.network, _fmt(s.mean), _fmt(s.std), _fmt(s.min), _fmt(s.max),
                        s.violation_hours))


def write_kde_csv(curves: dict, path) -> None:
    """``curves`` maps a (scenario, network) label pair to a DensityCurve."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "network", "load_kwh", "density"))
        for (scenario, network), c in curves.items():
            for gx, dy in zip(c.grid, c.density):
                w.writerow((scenario, network, _fmt(gx), _fmt(dy)))


def write_json(data, path) -> None:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if hasattr(o, "__dataclass_fields__"):
            return asdict(o)
        raise TypeError(type(o).__name__)

    Path(path).write_text(json.dumps(data, sort_keys=True, indent=1, default=default), encoding="utf-8")
