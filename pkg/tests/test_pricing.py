import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evpricing.env import RewardWeights
from evpricing.errors import InvalidHour, MissingModel, ShapeMismatch
from evpricing.pricing import (
    SCENARIO_CSV_HEADER, STRATEGIES, ScenarioConfig, TargetPolicy, compose_price, network_days_from,
    run_scenario, tou_price, tou_schedule,
)

EXPECTED_TOU = [0.4] * 7 + [0.7] * 3 + [1.0] * 5 + [0.7] * 3 + [1.0] * 3 + [0.7] * 3


def test_tou_table():
    assert tou_schedule().tolist() == EXPECTED_TOU
    assert tou_price(0) == 0.4 and tou_price(12) == 1.0 and tou_price(23) == 0.7
    for bad in (-1, 24, 3.5, True, "5"):
        with pytest.raises(InvalidHour):
            tou_price(bad)


def test_compose_price():
    assert compose_price(0.4, 0.5, 0.6) == pytest.approx(0.7)
    assert compose_price(1.0, 0.0, 0.6) == 1.0
    assert np.allclose(compose_price(tou_schedule(), np.ones(24), 0.6), tou_schedule() + 0.6)
    for args in ((-0.1, 0.2, 0.6), (0.4, -0.2, 0.6), (0.4, 0.2, -1)):
        with pytest.raises(ValueError):
            compose_price(*args)


@given(st.floats(0, 5), st.floats(0, 1), st.floats(0, 2))
def test_composed_price_never_below_base(p, d, s):
    assert compose_price(p, d, s) >= p


def test_scenario_config_validation():
    assert ScenarioConfig("pv").strategy == "PV"
    for kw in ({"strategy": "X"}, {"penetration": 1.0}, {"price_scale": -1}, {"calibration": "week"}):
        with pytest.raises(ValueError):
            ScenarioConfig(**kw)


def test_tou_scenario_hits_penetration(world_30):
    for cal in ("window", "day"):
        res = run_scenario(ScenarioConfig("TOU", penetration=0.2, calibration=cal), None, world_30)
        for net in ("res", "com"):
            assert abs(res.ev_fraction(net) - 0.2) < 1e-6
            t = res.traces[net]
            assert np.allclose(t["total_kwh"], t["conv_kwh"] + t["ev_kwh"])
            assert np.array_equal(t["price"], t["p_conv"])
        if cal == "day":
            t = res.traces["res"]
            day_frac = t["ev_kwh"].sum(axis=1) / t["total_kwh"].sum(axis=1)
            assert np.allclose(day_frac, 0.2, atol=1e-9)


@pytest.mark.parametrize("strategy", ["PV", "PVB"])
def test_learned_strategies_need_agents(world_30, strategy):
    for agents in (None, (TargetPolicy(),), (TargetPolicy(), None)):
        with pytest.raises(MissingModel):
            run_scenario(ScenarioConfig(strategy), agents, world_30)


def test_target_policy_prices(world_30):
    pol = TargetPolicy(mix=0.0)
    res = run_scenario(ScenarioConfig("PV", penetration=0.3), (pol, pol), world_30)
    t = res.traces["res"]
    assert np.allclose(t["price"], t["p_conv"] + 0.6 * t["delta_a"])
    assert np.all(t["price"] >= t["p_conv"]) and np.all(t["price"] <= t["p_conv"] + 0.6 + 1e-12)
    assert abs(res.ev_fraction("com") - 0.3) < 1e-6
    with pytest.raises(ValueError):
        TargetPolicy(1.5)


def test_target_policy_blend():
    pol = TargetPolicy(0.25)
    a, b = np.full(24, 0.8), np.zeros(24)
    cong = np.arange(24) % 2 == 0
    out = pol.act_on_targets(a, b, cong)
    assert np.allclose(out[cong], 0.6) and np.allclose(out[~cong], 0.8)
    # unequal weights: the heavier target is the unique optimum
    assert np.allclose(pol.act_on_targets(a, b, cong, RewardWeights(0.7, 0.3))[cong], 0.8)
    assert np.allclose(pol.act_on_targets(a, b, cong, RewardWeights(0.3, 0.7))[cong], 0.0)
    assert np.allclose(pol.act_on_targets(a, b, cong, RewardWeights(1.0, 0.0)), a)


def test_scenario_csv(world_30, tmp_path):
    res = run_scenario(ScenarioConfig("TOU"), None, world_30.days(slice(0, 2)))
    path = tmp_path / "s.csv"
    res.write_csv(path)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SCENARIO_CSV_HEADER
    assert len(rows) == 1 + 2 * 2 * 24
    assert rows[1][:3] == ["TOU", "res", "0"] and rows[-1][:3] == ["TOU", "com", "47"]


def test_network_days_from(world_30):
    res = run_scenario(ScenarioConfig("TOU"), None, world_30)
    r, c = network_days_from(res, 3)
    assert np.allclose(r.total, res.traces["res"]["total_kwh"][3])
    with pytest.raises(ShapeMismatch):
        network_days_from(res, 30)


def test_world_env_strategies(world_30):
    assert set(STRATEGIES) == {"TOU", "PV", "PVB"}
    assert not world_30.env("PV").config.balance
    env = world_30.env("PVB", (0.1, 0.3), weights=RewardWeights(0.7, 0.3))
    assert env.levels == (0.1, 0.3) and env.config.weights.omega1 == 0.7
    with pytest.raises(ValueError):
        world_30.env("XYZ")
