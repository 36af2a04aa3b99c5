import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra import numpy as hnp

from evpricing import evdemand as ev
from evpricing.errors import DegeneratePrices, ShapeMismatch
from evpricing.pricing import tou_schedule

prices = hnp.arrays(float, 24, elements=st.floats(0.0, 3.0, allow_nan=False))
params = st.builds(ev.DemandParams, c1=st.floats(0, 5), c2=st.floats(0, 5), kappa=st.floats(0, 1))


def _dedupe_sum(values, tol=1e-9):
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return sum(out)


def test_unique_price_sum_on_tou_table():
    assert ev.unique_price_sum(tou_schedule(), tou_schedule()) == pytest.approx(0.4 + 0.7 + 1.0)


def test_unique_price_sum_cases():
    assert ev.unique_price_sum(np.full(24, 0.3), np.full(24, 0.3)) == pytest.approx(0.3)
    distinct = np.arange(1, 49) / 10.0
    assert ev.unique_price_sum(distinct[:24], distinct[24:]) == pytest.approx(distinct.sum())
    with pytest.raises(DegeneratePrices):
        ev.unique_price_sum(np.zeros(24), np.zeros(24))


@given(prices, prices)
def test_unique_price_sum_matches_set_oracle(a, b):
    expected = _dedupe_sum(np.concatenate([a, b]).tolist())
    if expected <= 0:
        with pytest.raises(DegeneratePrices):
            ev.unique_price_sum(a, b)
    else:
        assert ev.unique_price_sum(a, b) == pytest.approx(expected)


def test_demand_hour_edge_cases():
    p = ev.DemandParams(kappa=1.0)
    assert ev.demand_hour("res", 0, 0.0, 100.0, 0.5, 0.7, 2.0, p) == 0
    assert ev.demand_hour("res", 0, 0.1, 100.0, 2.0, 0.7, 2.0, p) == 0
    assert ev.demand_hour("com", 0, 0.1, 100.0, 0.5, 0.5, 2.0, ev.DemandParams(kappa=0.0)) == 0
    # hand value: 0.1 * 100 * [0.5 * (1 - 0.5/2) + 0.5 * (0.7 - 0.5)] = 4.75
    assert ev.demand_hour("res", 3, 0.1, 100.0, 0.5, 0.7, 2.0, ev.DemandParams()) == pytest.approx(4.75)
    with pytest.raises(DegeneratePrices):
        ev.demand_hour("res", 0, 0.1, 1.0, 0.5, 0.5, 0.0, p)


@given(st.floats(0, 0.2), st.floats(0, 1e4), st.floats(0, 3), st.floats(0, 3), st.floats(0, 1), params)
def test_demand_monotone_linear_nonnegative(rho, g, own, other, bump, prm):
    p_tot = 10.0
    y = ev.demand_hour("res", 0, rho, g, own, other, p_tot, prm)
    assert y >= 0
    assert ev.demand_hour("res", 0, rho, g, own + bump, other, p_tot, prm) <= y + 1e-9
    assert ev.demand_hour("res", 0, rho, g, own, other + bump, p_tot, prm) >= y - 1e-9
    assert ev.demand_hour("res", 0, 2 * rho, g, own, other, p_tot, prm) == pytest.approx(2 * y)
    assert ev.demand_hour("res", 0, rho, 3 * g, own, other, p_tot, prm) == pytest.approx(3 * y)


@given(prices, prices, params)
def test_networks_are_mirror_images(pr, pc, prm):
    assume(_dedupe_sum(np.concatenate([pr, pc]).tolist()) > 0)
    dist = ev.default_commute()
    swapped = ev.CommuteDistribution(dist.rho_com, dist.rho_res)
    wr, wc = ev.hourly_weights(pr, pc, dist, prm, prm)
    sr, sc = ev.hourly_weights(pc, pr, swapped, prm, prm)
    assert np.allclose(wr, sc) and np.allclose(wc, sr)


def test_demand_day_properties():
    dist = ev.default_commute()
    p = ev.DemandParams(kappa=1.0, g_mean=1000.0)
    a = ev.demand_day(tou_schedule(), tou_schedule(), dist, p, p, seed=1)
    b = ev.demand_day(tou_schedule(), tou_schedule(), dist, p, p, seed=2)
    assert np.array_equal(a[0], b[0])  # g_std = 0 ignores the seed
    price = tou_schedule()
    expected = 1000.0 * np.sum(dist.rho_res * (1 - price / 2.1))
    assert a[0].sum() == pytest.approx(expected)
    uniform = ev.CommuteDistribution(np.full(24, 1 / 24), np.full(24, 1 / 24))
    flat = ev.demand_day(np.full(24, 0.5), np.full(24, 0.5), uniform, p, p, seed=0)[0]
    assert np.allclose(flat, flat[0])


def test_demand_day_noise_is_seeded_and_truncated():
    dist = ev.default_commute()
    p = ev.DemandParams(g_mean=10.0, g_std=100.0)
    a = ev.demand_day(tou_schedule(), tou_schedule(), dist, p, p, seed=3)
    b = ev.demand_day(tou_schedule(), tou_schedule(), dist, p, p, seed=3)
    assert np.array_equal(a[0], b[0]) and np.all(a[0] >= 0)


def test_default_commute_shape():
    d = ev.default_commute()
    assert d.rho_res.sum() == pytest.approx(1.0) and d.rho_com.sum() == pytest.approx(1.0)
    assert 9 <= int(np.argmax(d.rho_com)) <= 16
    assert 18 <= int(np.argmax(d.rho_res)) <= 23


def test_commute_validation():
    with pytest.raises(ShapeMismatch):
        ev.CommuteDistribution(np.ones(23) / 23, np.ones(24) / 24)
    with pytest.raises(ValueError):
        ev.CommuteDistribution(np.ones(24), np.ones(24) / 24)
    with pytest.raises(ValueError):
        ev.DemandParams(kappa=1.5)


def test_synth_dataset_rows_split_and_csv(tmp_path):
    rng = np.random.default_rng(0)
    pr = ev.random_price_days(365, tou_schedule(), rng)
    ds = ev.synth_ev_dataset(365, pr, ev.default_commute(), ev.DemandParams(), ev.DemandParams(), seed=0)
    assert len(ds.target("res")) == 8760 and len(ds.target("com")) == 8760
    tr, va = ev.split_by_day(ds, 0.8)
    assert len(tr) == 2 * 24 * 292 and len(va) == 2 * 24 * 73
    assert tr.day.max() < va.day.min()
    small = ev.synth_ev_dataset(2, (pr[0][:2], pr[1][:2]), ev.default_commute(), ev.DemandParams(),
                                ev.DemandParams(), seed=0)
    small.to_csv(tmp_path / "ev.csv")
    lines = (tmp_path / "ev.csv").read_text().splitlines()
    assert lines[0] == ",".join(ev.EV_CSV_HEADER) and len(lines) == 1 + 2 * 2 * 24
    with pytest.raises(ShapeMismatch):
        ev.synth_ev_dataset(3, pr, ev.default_commute(), ev.DemandParams(), ev.DemandParams(), seed=0)
