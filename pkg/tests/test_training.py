import numpy as np
import pytest

from evpricing.agents import AgentConfig, load_agents, save_agents, train
from evpricing.agents.training import TRACE_HEADER, agents_metadata, checkpoint_episode
from evpricing.errors import ArchitectureMismatch, ConfigError, MissingModel


def _small(algo="DDPG", **kw):
    base = dict(algorithm=algo, actor_hidden=(8,), critic_hidden=(8,), warmup_episodes=2, batch_size=16,
                rollout_episodes=4, ppo_minibatch=16)
    base.update(kw)
    return AgentConfig(**base)


@pytest.fixture(scope="module")
def small_world():
    from evpricing.pricing import synthetic_world
    return synthetic_world(7, seed=3)


@pytest.mark.parametrize("algo", ["DDPG", "SAC", "PPO"])
def test_training_is_deterministic_and_rewards_nonpositive(small_world, algo):
    cfg = _small(algo)
    a = train(small_world.env("PVB"), (cfg, cfg), episodes=10, seed=4)
    b = train(small_world.env("PVB"), (cfg, cfg), episodes=10, seed=4)
    assert a.rewards.shape == (10, 2)
    assert np.array_equal(a.rewards, b.rewards)
    assert np.all(a.rewards <= 0)
    s = np.random.default_rng(0).random(a.agents[0].state_dim)
    assert np.array_equal(a.agents[0].act(s), b.agents[0].act(s))
    c = train(small_world.env("PVB"), (cfg, cfg), episodes=10, seed=5)
    assert not np.array_equal(a.rewards, c.rewards)


@pytest.mark.parametrize("algo", ["DDPG", "PPO"])
def test_resume_matches_uninterrupted_run(small_world, algo, tmp_path):
    cfg = _small(algo)
    full = train(small_world.env("PV", (0.1, 0.3)), (cfg, cfg), episodes=12, seed=2)
    ck = tmp_path / "ck.pkl"

    def crash(ep, _):
        if ep == 6:
            raise KeyboardInterrupt

    with pytest.raises(KeyboardInterrupt):
        train(small_world.env("PV", (0.1, 0.3)), (cfg, cfg), episodes=12, seed=2, checkpoint=ck,
              checkpoint_every=5, callback=crash)
    assert checkpoint_episode(ck) == 5
    rest = train(small_world.env("PV", (0.1, 0.3)), (cfg, cfg), episodes=12, seed=2, resume=ck)
    assert np.array_equal(rest.rewards, full.rewards)
    assert rest.rewards.shape == (12, 2)
    with pytest.raises(ConfigError):
        train(small_world.env("PV"), (cfg, cfg), episodes=3, seed=2, resume=ck)


def test_periodic_checkpoints(small_world, tmp_path):
    cfg = _small()
    ck = tmp_path / "ck.pkl"
    seen = []

    def cb(ep, _):
        if ck.exists():
            seen.append((ep, checkpoint_episode(ck)))

    train(small_world.env("PVB"), (cfg, cfg), episodes=7, seed=0, checkpoint=ck, checkpoint_every=3, callback=cb)
    assert seen[0] == (3, 3) and (6, 6) in seen
    assert checkpoint_episode(ck) == 7


def test_trace_file(small_world, tmp_path):
    cfg = _small(batch_size=2)
    res = train(small_world.env("PVB"), (cfg, cfg), episodes=4, seed=0)
    path = tmp_path / "trace.csv"
    res.write_trace(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER) and len(lines) == 1 + 4 * 2
    assert np.all(np.isnan(res.actor_loss[:2]))  # warm-up episodes do not update
    assert np.all(np.isfinite(res.critic_loss[2:]))


def test_agents_file_round_trip(small_world, tmp_path):
    for algo in ("DDPG", "SAC", "PPO"):
        cfg = _small(algo)
        res = train(small_world.env("PVB"), (cfg, cfg), episodes=3, seed=1)
        path = tmp_path / f"{algo}.json"
        save_agents(res.agents, path, {"strategy": "PVB"})
        loaded = load_agents(path)
        s = np.random.default_rng(1).random((3, res.agents[0].state_dim))
        for a, b in zip(res.agents, loaded):
            assert np.array_equal(a.act(s), b.act(s))
        assert agents_metadata(path) == {"strategy": "PVB"}
    with pytest.raises(MissingModel):
        load_agents(tmp_path / "absent.json")
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(ArchitectureMismatch):
        load_agents(tmp_path / "bad.json")


def test_needs_two_configs(small_world):
    with pytest.raises(ConfigError):
        train(small_world.env("PVB"), (_small(),), episodes=1)
