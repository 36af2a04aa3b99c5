"""Load/weather ingestion: raw 10-minute samples to an hourly feature matrix.

The raw layout follows the public Tetouan city distribution-network dataset.
When that file is not available, :func:`synth_tetouan_like` produces samples
with the same columns and the same qualitative daily/weekly structure.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstantFeature, DataError, EmptyData, OrderViolation, ShapeMismatch

logger = logging.getLogger(__name__)

WEATHER_FIELDS = ("temperature", "humidity", "wind_speed", "general_diffuse_flows", "diffuse_flows")
CSV_HEADER = (
    "Datetime",
    "Temperature",
    "Humidity",
    "WindSpeed",
    "GeneralDiffuseFlows",
    "DiffuseFlows",
    "PowerConsumption",
)
HOURLY_HEADER = ("datetime", "hour_of_day", "day_of_week", *WEATHER_FIELDS, "power")
DATETIME_FORMAT = "%Y-%m-%d %H:%M"


@dataclass(frozen=True)
class RawSample:
    timestamp: datetime
    temperature: float
    humidity: float
    wind_speed: float
    general_diffuse_flows: float
    diffuse_flows: float
    power: float


@dataclass(frozen=True)
class HourlyRecord:
    hour_of_day: int
    day_of_week: int
    temperature: float
    humidity: float
    wind_speed: float
    general_diffuse_flows: float
    diffuse_flows: float
    power: float
    start: datetime | None = None


@dataclass(frozen=True)
class ScalerParams:
    names: tuple[str, ...]
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        if np.any(self.max < self.min):
            raise ValueError("scaler max must be >= min for every feature")


@dataclass
class FeatureMatrix:
    values: np.ndarray
    columns: list[str] = field(default_factory=list)

    @property
    def shape(self):
        return self.values.shape


HOUR_COLUMNS = [f"hour_{h}" for h in range(24)]
DAY_COLUMNS = [f"day_{d}" for d in range(7)]
FEATURE_COLUMNS = HOUR_COLUMNS + DAY_COLUMNS + list(WEATHER_FIELDS)


def downsample_hourly(samples: Sequence[RawSample]) -> list[HourlyRecord]:
    """Aggregate sub-hourly samples into one record per calendar hour.

    Power readings are summed over the hour; weather fields are averaged.
    A trailing hour with fewer samples than the inferred sampling rate is
    dropped rather than extrapolated.
    """
    if len(samples) == 0:
        raise EmptyData("no samples to downsample")
    stamps = [s.timestamp for s in samples]
    for a, b in zip(stamps, stamps[1:]):
        if b <= a:
            raise OrderViolation(f"timestamps not strictly increasing at {b}")

    per_hour = None
    if len(stamps) > 1:
        steps = sorted((b - a).total_seconds() for a, b in zip(stamps, stamps[1:]))
        step = steps[len(steps) // 2]
        if 0 < step < 3600:
            per_hour = int(round(3600 / step))

    groups: list[list[RawSample]] = []
    current_key = None
    for s in samples:
        key = s.timestamp.replace(minute=0, second=0, microsecond=0)
        if key != current_key:
            groups.append([])
            current_key = key
        groups[-1].append(s)
    if per_hour is not None and len(groups[-1]) < per_hour:
        groups.pop()

    records = []
    for group in groups:
        start = group[0].timestamp.replace(minute=0, second=0, microsecond=0)
        weather = {
            name: math.fsum(getattr(s, name) for s in group) / len(group) for name in WEATHER_FIELDS
        }
        records.append(
            HourlyRecord(
                hour_of_day=start.hour,
                day_of_week=start.weekday(),
                power=math.fsum(s.power for s in group),
                start=start,
                **weather,
            )
        )
    return records


def minmax_fit(X: np.ndarray, names: Sequence[str] | None = None) -> ScalerParams:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise EmptyData("cannot fit scaler on zero rows")
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    return ScalerParams(names=names, min=X.min(axis=0), max=X.max(axis=0))


def minmax_scale(values, params: ScalerParams) -> np.ndarray:
    """Map each feature affinely so the fitted min goes to 0 and max to 1.

    Values outside the fitted range (e.g. a test set) fall outside [0, 1].
    """
    span = params.max - params.min
    if np.any(span == 0):
        bad = [n for n, s in zip(params.names, np.atleast_1d(span)) if s == 0]
        raise ConstantFeature(f"constant feature(s): {bad}")
    return (np.asarray(values, dtype=float) - params.min) / span


def minmax_inverse(scaled, params: ScalerParams) -> np.ndarray:
    return np.asarray(scaled, dtype=float) * (params.max - params.min) + params.min


def pearson_corr(feature, target) -> float:
    x = np.asarray(feature, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeMismatch(f"pearson_corr needs equal 1-D vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ShapeMismatch("pearson_corr needs at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ConstantFeature("pearson_corr undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _one_hot(index: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((index.size, width))
    out[np.arange(index.size), index] = 1.0
    return out


def records_to_arrays(records: Sequence[HourlyRecord]):
    hours = np.array([r.hour_of_day for r in records], dtype=int)
    days = np.array([r.day_of_week for r in records], dtype=int)
    weather = np.array([[getattr(r, f) for f in WEATHER_FIELDS] for r in records], dtype=float)
    power = np.array([r.power for r in records], dtype=float)
    return hours, days, weather, power


def engineer_features(
    records: Sequence[HourlyRecord], scaler: ScalerParams | None = None
) -> tuple[FeatureMatrix, np.ndarray, ScalerParams]:
    """One-hot hour/day blocks plus min-max scaled weather columns.

    Pass the training ``scaler`` when transforming held-out data so the test
    set is scaled with training statistics.
    """
    if len(records) == 0:
        raise EmptyData("no hourly records")
    hours, days, weather, power = records_to_arrays(records)
    if np.any((hours < 0) | (hours > 23)) or np.any((days < 0) | (days > 6)):
        raise DataError("hour_of_day/day_of_week out of range")
    if scaler is None:
        scaler = minmax_fit(weather, WEATHER_FIELDS)
    scaled = minmax_scale(weather, scaler)
    values = np.hstack([_one_hot(hours, 24), _one_hot(days, 7), scaled])
    return FeatureMatrix(values=values, columns=list(FEATURE_COLUMNS)), power, scaler


NUMERIC_COLUMNS = ["hour", "day"] + list(WEATHER_FIELDS)


def numeric_features(records: Sequence[HourlyRecord], scaler: ScalerParams) -> FeatureMatrix:
    """Compact encoding for polynomial bases: hour/23, day/6 and scaled weather.

    A degree-2 expansion of the one-hot blocks is rank deficient (products of
    distinct indicators vanish), so the polynomial baseline uses this layout.
    """
    if len(records) == 0:
        raise EmptyData("no hourly records")
    hours, days, weather, _ = records_to_arrays(records)
    values = np.column_stack([hours / 23.0, days / 6.0, minmax_scale(weather, scaler)])
    return FeatureMatrix(values=values, columns=list(NUMERIC_COLUMNS))


def pcc_report(records: Sequence[HourlyRecord]) -> dict[str, float]:
    """Correlation of each raw feature with hourly power, in descending order."""
    hours, days, weather, power = records_to_arrays(records)
    columns = {
        "Hour": hours,
        "Day": days,
        "Temperature": weather[:, 0],
        "Humidity": weather[:, 1],
        "WindSpeed": weather[:, 2],
        "GeneralDiffuseFlows": weather[:, 3],
        "DiffuseFlows": weather[:, 4],
    }
    report = {name: pearson_corr(col, power) for name, col in columns.items()}
    return dict(sorted(report.items(), key=lambda kv: -kv[1]))


# --- CSV -------------------------------------------------------------------

def _parse_datetime(text: str) -> datetime:
    text = text.strip()
    for fmt in (DATETIME_FORMAT, "%Y-%m-%d %H:%M:%S", "%m/%d/%Y %H:%M"):
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    raise DataError(f"unparseable datetime {text!r}")


def read_raw_csv(path) -> list[RawSample]:
    """Read the raw 10-minute CSV.

    Rows with missing or non-numeric values are skipped and counted. The
    original three-zone layout (``Zone 1 Power Consumption`` ...) is also
    accepted; zone powers are summed into one total.
    """
    path = Path(path)
    samples = []
    skipped = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyData(f"{path}: empty file") from None
        zone_cols = [i for i, h in enumerate(header) if h.lower().startswith("zone")]
        if tuple(header) == CSV_HEADER:
            power_cols = [6]
        elif len(header) >= 6 and zone_cols:
            power_cols = zone_cols
        else:
            raise DataError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            try:
                if any(row[i].strip() == "" for i in range(6)) or any(row[i].strip() == "" for i in power_cols):
                    raise ValueError
                nums = [float(row[i]) for i in range(1, 6)]
                power = sum(float(row[i]) for i in power_cols)
                if not all(math.isfinite(v) for v in (*nums, power)):
                    raise ValueError
                samples.append(RawSample(_parse_datetime(row[0]), *nums, power))
            except (ValueError, IndexError):
                skipped += 1
    if skipped:
        logger.warning("%s: skipped %d row(s) with missing or invalid values", path, skipped)
    if not samples:
        raise EmptyData(f"{path}: no usable rows")
    return samples


def write_raw_csv(samples: Iterable[RawSample], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in samples:
            w.writerow([
                s.timestamp.strftime(DATETIME_FORMAT),
                repr(s.temperature), repr(s.humidity), repr(s.wind_speed),
                repr(s.general_diffuse_flows), repr(s.diffuse_flows), repr(s.power),
            ])


def write_hourly_csv(records: Iterable[HourlyRecord], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HOURLY_HEADER)
        for r in records:
            w.writerow([
                r.start.strftime(DATETIME_FORMAT) if r.start else "",
                r.hour_of_day, r.day_of_week,
                *(repr(float(getattr(r, f))) for f in WEATHER_FIELDS),
                repr(float(r.power)),
            ])


def read_hourly_csv(path) -> list[HourlyRecord]:
    records = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(HourlyRecord(
                hour_of_day=int(row["hour_of_day"]),
                day_of_week=int(row["day_of_week"]),
                power=float(row["power"]),
                start=_parse_datetime(row["datetime"]) if row["datetime"] else None,
                **{f: float(row[f]) for f in WEATHER_FIELDS},
            ))
    if not records:
        raise EmptyData(f"{path}: no hourly records")
    return records


# --- synthetic stand-in ------------------------------------------------------

# Relative hourly demand of a mixed urban feeder: night valley around 04:00,
# daytime plateau, evening peak around 20:00.
_URBAN_SHAPE = np.array([
    0.70, 0.62, 0.58, 0.56, 0.55, 0.57, 0.64, 0.74, 0.84, 0.90, 0.93, 0.95,
    0.96, 0.95, 0.93, 0.92, 0.93, 0.98, 1.10, 1.22, 1.27, 1.20, 1.02, 0.83,
])
# Monday..Sunday multipliers.
_WEEK_SHAPE = np.array([1.0, 1.01, 1.01, 1.0, 0.99, 0.92, 0.88])


def synth_tetouan_like(days: int, seed: int, start: datetime = datetime(2017, 1, 1)) -> list[RawSample]:
    """Deterministic 10-minute samples shaped like the Tetouan feeder data."""
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    n = days * 144
    t = np.arange(n) / 6.0  # hours since start
    hour = t % 24
    day_index = (t // 24).astype(int)
    doy = (start.timetuple().tm_yday - 1 + t / 24.0) % 365.0

    season = -np.cos(2 * np.pi * (doy - 20) / 365.0)  # -1 mid-January, +1 mid-July
    daily_temp = 18 + 7 * season + rng.normal(0, 1.5, days)[day_index]
    temperature = daily_temp + 4.5 * np.sin(2 * np.pi * (hour - 9) / 24.0) + rng.normal(0, 0.3, n)
    humidity = np.clip(75 - 2.2 * (temperature - 18) + rng.normal(0, 4, n), 10, 100)
    wind = np.clip(0.08 + 4.9 * (rng.random(days)[day_index] < 0.35) + rng.normal(0, 0.05, n), 0.05, 6.5)
    sun = np.clip(np.sin(np.pi * (hour - 6.5) / 13.0), 0, None) * (0.75 + 0.25 * season)
    cloud = np.clip(rng.beta(5, 2, days)[day_index], 0, 1)
    general = np.clip(900 * sun * cloud + rng.normal(0, 5, n), 0.004, None)
    diffuse = np.clip(180 * sun * (1.2 - cloud) + rng.normal(0, 3, n), 0.01, None)

    weekday = np.array([(start + timedelta(days=int(d))).weekday() for d in range(days)])[day_index]
    frac = hour - np.floor(hour)
    h0 = np.floor(hour).astype(int)
    shape = (1 - frac) * _URBAN_SHAPE[h0] + frac * _URBAN_SHAPE[(h0 + 1) % 24]
    weather_effect = 1 + 0.011 * (temperature - 18) + 0.004 * np.abs(temperature - 18)
    ar = np.empty(n)
    ar[0] = 0.0
    shocks = rng.normal(0, 0.008, n)
    for i in range(1, n):
        ar[i] = 0.97 * ar[i - 1] + shocks[i]
    power = 68000 * shape * _WEEK_SHAPE[weekday] * weather_effect * (1 + ar + rng.normal(0, 0.01, n))

    stamps = [start + timedelta(minutes=10 * i) for i in range(n)]
    return [
        RawSample(ts, float(a), float(b), float(c), float(d), float(e), float(p))
        for ts, a, b, c, d, e, p in zip(stamps, temperature, humidity, wind, general, diffuse, power)
    ]
