import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evpricing.errors import DegenerateDensity, EmptyData, ShapeMismatch
from evpricing.evaluation import (
    KDE_POINTS, gw_to_kwh_per_hour, hourly_profile, kde, load_stats, penetration_sweep, utilization_gap,
    write_json, write_kde_csv, write_sweep_csv,
)
from evpricing.pricing import ScenarioConfig, run_scenario


def test_load_stats_example():
    s = load_stats([1.0, 2.0, 3.0, 10.0], capacity=2.5)
    assert s.mean == 4.0 and s.min == 1.0 and s.max == 10.0
    assert s.std == pytest.approx(np.sqrt(((1 - 4) ** 2 + 4 + 1 + 36) / 3))
    assert s.violation_hours == 2
    assert load_stats([5.0], 1.0).std == 0.0
    with pytest.raises(EmptyData):
        load_stats([], 1.0)


def test_units():
    assert gw_to_kwh_per_hour(0.9) == pytest.approx(900_000.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=3, max_size=200).filter(lambda v: max(v) - min(v) > 1e-3),
       st.sampled_from([None, 0.05, 0.5]))
def test_kde_integrates_to_one(values, frac):
    # explicit bandwidths are a fraction of the range so the fixed grid resolves each kernel
    c = kde(values, None if frac is None else frac * (max(values) - min(values)))
    assert c.grid.shape == (KDE_POINTS,)
    assert np.all(c.density >= 0)
    assert c.integral() == pytest.approx(1.0, abs=0.02)


def test_kde_errors():
    for bad in ([1.0], [2.0, 2.0, 2.0]):
        with pytest.raises(DegenerateDensity):
            kde(bad)
    with pytest.raises(ValueError):
        kde([1.0, 2.0], bandwidth=0.0)


def test_utilization_gap():
    assert utilization_gap([50, 100], 100, [20, 80], 200) == pytest.approx((0.4 + 0.6) / 2)
    assert utilization_gap([1, 2], 1, [1, 2], 1) == 0.0
    with pytest.raises(ShapeMismatch):
        utilization_gap([1, 2], 1, [1], 1)
    with pytest.raises(EmptyData):
        utilization_gap([], 1, [], 1)


@given(st.lists(st.tuples(st.floats(0, 1e3), st.floats(0, 1e3)), min_size=1, max_size=50))
def test_gap_symmetric_and_nonnegative(pairs):
    a, b = np.array(pairs).T
    g = utilization_gap(a, 7.0, b, 3.0)
    assert g >= 0 and g == pytest.approx(utilization_gap(b, 3.0, a, 7.0))


def test_hourly_profile():
    x = np.vstack([np.arange(24.0), np.arange(24.0) + 2])
    assert np.allclose(hourly_profile(x), np.arange(24.0) + 1)
    assert np.allclose(hourly_profile(x.ravel()), np.arange(24.0) + 1)


def test_sweep_and_writers(world_30, tmp_path):
    run = lambda f: run_scenario(ScenarioConfig("TOU", penetration=f), None, world_30)  # noqa: E731
    rows = penetration_sweep((0.1, 0.2, 0.3), run)
    assert len(rows) == 6 and [r.network for r in rows[:2]] == ["res", "com"]
    means = [r.stats.mean for r in rows if r.network == "res"]
    assert means[0] < means[1] < means[2]
    with pytest.raises(ValueError):
        penetration_sweep((0.0,), run)
    write_sweep_csv(rows, tmp_path / "sweep.csv")
    with (tmp_path / "sweep.csv").open() as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["level", "network", "mean", "std", "min", "max", "violation_hours"] and len(got) == 7
    curves = {("TOU", "res"): kde(run(0.3).total("res"))}
    write_kde_csv(curves, tmp_path / "kde.csv")
    assert len((tmp_path / "kde.csv").read_text().splitlines()) == 1 + KDE_POINTS
    write_json({"a": np.arange(2), "s": rows[0].stats}, tmp_path / "x.json")
    assert '"violation_hours"' in (tmp_path / "x.json").read_text()
