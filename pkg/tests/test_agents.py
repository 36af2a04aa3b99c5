import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evpricing.agents import AgentConfig
from evpricing.agents.buffer import Batch, ReplayBuffer
from evpricing.agents.ddpg import DdpgAgent, critic_loss_and_grads
from evpricing.agents.nn import Adam, Mlp, clip_grad_norm, global_norm, soft_update
from evpricing.agents.ppo import PpoAgent, Rollout, clipped_surrogate, gae
from evpricing.agents.sac import SacAgent
from evpricing.errors import ArchitectureMismatch, ConfigError, EmptyBatch, EmptyRollout, ShapeMismatch
from gradchecks import CHECKS


# -- network core --------------------------------------------------------------------

def test_zero_net_and_identity_layer():
    net = Mlp((3, 4, 2), "identity", 0)
    for p in net.params:
        p[...] = 0
    assert np.all(net(np.ones(3)) == 0)
    lin = Mlp((3, 3), "identity", 0)
    lin.params[0][...] = np.eye(3)
    lin.params[1][...] = 0
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(lin(x), x)


@given(st.integers(0, 10 ** 6))
def test_actor_outputs_in_unit_box(seed):
    rng = np.random.default_rng(seed)
    net = Mlp((48, 64, 64, 24), "sigmoid", rng)
    out = net(rng.normal(size=(4, 48)) * 10)
    assert out.shape == (4, 24) and np.all((out >= 0) & (out <= 1))


def test_linear_half_square_gradient():
    rng = np.random.default_rng(0)
    net = Mlp((3, 2), "identity", rng)
    net.params[1][...] = 0
    x = rng.normal(size=3)
    out, cache = net.forward(x)
    grads, _ = net.backward(cache, out)  # d/dout of 0.5 |out|^2
    assert np.allclose(grads[0], np.outer(x, net.params[0].T @ x))


def test_zero_seed_gives_zero_gradients():
    net = Mlp((3, 5, 2), "sigmoid", 1)
    _, cache = net.forward(np.ones((2, 3)))
    grads, g_in = net.backward(cache, np.zeros((2, 2)))
    assert all(np.all(g == 0) for g in grads) and np.all(g_in == 0)


@pytest.mark.parametrize("name", sorted(CHECKS))
def test_backprop_matches_finite_differences(name):
    for seed in range(5):
        assert CHECKS[name](np.random.default_rng(seed)) < 1e-4


def test_shape_errors():
    net = Mlp((3, 2), "identity", 0)
    with pytest.raises(ShapeMismatch):
        net(np.ones(4))
    bad = net.to_dict()
    bad["params"][0] = [[0.0]]
    with pytest.raises(ArchitectureMismatch):
        Mlp.from_dict(bad)


def test_adam_examples():
    p = [np.array([1.0, -2.0])]
    opt = Adam(p, lr=0.1)
    opt.step(p, [np.zeros(2)])
    assert np.array_equal(p[0], [1.0, -2.0])
    opt = Adam(p, lr=0.01)
    opt.step(p, [np.array([3.0, -0.5])])
    # bias correction makes the first step lr * sign(g)
    assert np.allclose(p[0], [1.0 - 0.01, -2.0 + 0.01], atol=1e-8)
    for _ in range(50):
        opt.step(p, [np.array([3.0, -0.5])])
    assert p[0][0] < 0.99 and p[0][1] > -1.99


def test_adam_state_round_trip():
    p = [np.ones(3)]
    opt = Adam(p)
    opt.step(p, [np.ones(3)])
    other = Adam([np.ones(3)])
    other.load_dict(json.loads(json.dumps(opt.to_dict())))
    assert other.t == 1 and np.array_equal(other.m[0], opt.m[0])


def test_soft_update_examples():
    a, b = Mlp((2, 2), "identity", 0), Mlp((2, 2), "identity", 1)
    before = [p.copy() for p in a.params]
    soft_update(a, b, 0.0)
    assert all(np.array_equal(x, y) for x, y in zip(a.params, before))
    soft_update(a, b, 1.0)
    assert all(np.array_equal(x, y) for x, y in zip(a.params, b.params))
    for p in a.params:
        p[...] = 0
    for p in b.params:
        p[...] = 2
    soft_update(a, b, 0.5)
    assert all(np.all(p == 1) for p in a.params)
    with pytest.raises(ArchitectureMismatch):
        soft_update(a, Mlp((2, 3), "identity", 0), 0.5)


@given(st.floats(0, 1), st.integers(0, 1000))
def test_soft_update_contracts(tau, seed):
    t, o = Mlp((3, 4, 2), "identity", seed), Mlp((3, 4, 2), "identity", seed + 1)
    dist = lambda: np.sqrt(sum(np.sum((x - y) ** 2) for x, y in zip(t.params, o.params)))  # noqa: E731
    before = dist()
    soft_update(t, o, tau)
    assert dist() == pytest.approx((1 - tau) * before, rel=1e-9, abs=1e-12)


@given(st.floats(0.01, 5), st.integers(0, 1000))
def test_gradient_clipping_bound(max_norm, seed):
    rng = np.random.default_rng(seed)
    grads = [rng.normal(size=(3, 4)) * 10, rng.normal(size=4)]
    clipped, norm = clip_grad_norm(grads, max_norm)
    assert norm == pytest.approx(global_norm(grads))
    assert global_norm(clipped) <= max_norm + 1e-9 or global_norm(clipped) == pytest.approx(norm)


# -- replay buffer ---------------------------------------------------------------------

@given(st.integers(1, 20), st.integers(0, 60))
def test_buffer_capacity_and_fifo(capacity, n):
    buf = ReplayBuffer(capacity, 2, 1)
    for i in range(n):
        buf.add([i, i], [i], float(i), [i, i], True)
    assert len(buf) == min(n, capacity)
    if n:
        kept = sorted(buf.reward[: len(buf)].tolist())
        assert kept == [float(i) for i in range(max(0, n - capacity), n)]


def test_buffer_sampling_and_serialization():
    buf = ReplayBuffer(10, 2, 1)
    with pytest.raises(EmptyBatch):
        buf.sample(4, np.random.default_rng(0))
    for i in range(7):
        buf.add([i, 0], [i], i, [0, i], i % 2)
    a = buf.sample(5, np.random.default_rng(3))
    b = buf.sample(5, np.random.default_rng(3))
    assert np.array_equal(a.reward, b.reward)
    other = ReplayBuffer(10, 2, 1)
    other.load_dict(json.loads(json.dumps(buf.to_dict())))
    assert np.array_equal(other.sample(5, np.random.default_rng(3)).state, a.state)


# -- configs ----------------------------------------------------------------------------

def test_agent_config_defaults_and_validation():
    c = AgentConfig()
    assert (c.gamma, c.tau, c.sac_alpha, c.ppo_clip, c.gae_lambda, c.ppo_epochs, c.entropy_coef, c.grad_clip,
            c.episodes, c.learning_rate) == (0.99, 0.005, 0.2, 0.2, 0.95, 4, 0.001, 0.5, 15000, 3e-4)
    assert AgentConfig(algorithm="sac").algorithm == "SAC"
    assert AgentConfig.from_dict(c.to_dict()) == c
    for bad in ({"algorithm": "A2C"}, {"gamma": 1.5}, {"tau": -0.1}, {"bogus": 1}):
        with pytest.raises(ConfigError):
            AgentConfig.from_dict(bad)


# -- DDPG ---------------------------------------------------------------------------------

def _one_step_batch(rng, n=8, sdim=4, adim=3):
    return Batch(rng.random((n, sdim)), rng.random((n, adim)), rng.normal(size=n), rng.random((n, sdim)),
                 np.ones(n))


def test_ddpg_one_step_targets_equal_rewards():
    rng = np.random.default_rng(0)
    ag = DdpgAgent(4, 3, AgentConfig(actor_hidden=(5,), critic_hidden=(5,)), rng)
    b = _one_step_batch(rng)
    assert np.array_equal(ag.critic_targets(b), b.reward)
    b.done[:] = 0
    assert not np.allclose(ag.critic_targets(b), b.reward)


def test_ddpg_perfect_critic_has_zero_loss():
    rng = np.random.default_rng(1)
    ag = DdpgAgent(4, 3, AgentConfig(actor_hidden=(5,), critic_hidden=(5,)), rng)
    for p in ag.critic.params:
        p[...] = 0
    b = _one_step_batch(rng)
    b.reward[:] = 0
    critic_loss, _ = ag.update_batch(b)
    assert critic_loss == 0.0
    with pytest.raises(EmptyBatch):
        ag.update_batch(Batch(*(np.zeros((0, k)) for k in (4, 3)), np.zeros(0), np.zeros((0, 4)), np.zeros(0)))


def test_ddpg_exploration_decays_and_stays_in_box():
    rng = np.random.default_rng(2)
    ag = DdpgAgent(4, 24, AgentConfig(actor_hidden=(8,), critic_hidden=(8,)), rng)
    s = rng.random(4)
    greedy = ag.act(s)
    early = np.std([ag.act(s, explore=True, progress=0.0) - greedy for _ in range(300)])
    late = np.std([ag.act(s, explore=True, progress=1.0) - greedy for _ in range(300)])
    assert late < early
    assert np.all((ag.act(s, explore=True) >= 0) & (ag.act(s, explore=True) <= 1))


def test_ddpg_critic_learns_oracle_rewards():
    """With rewards 0 everywhere (oracle actions), one-step critic loss heads to 0."""
    rng = np.random.default_rng(3)
    ag = DdpgAgent(4, 3, AgentConfig(actor_hidden=(8,), critic_hidden=(16,), learning_rate=1e-2), rng)
    b = _one_step_batch(rng, n=32)
    b.reward[:] = 0
    first = ag.update_batch(b)[0]
    for _ in range(300):
        last = ag.update_batch(b)[0]
    assert last < 1e-3 * max(first, 1e-12) or last < 1e-6


# -- SAC -------------------------------------------------------------------------------------

def test_sac_min_target_and_positive_temperature():
    rng = np.random.default_rng(4)
    ag = SacAgent(4, 3, AgentConfig(algorithm="SAC", actor_hidden=(6,), critic_hidden=(6,)), rng)
    b = _one_step_batch(rng)
    b.done[:] = 0
    state = ag.rng.bit_generator.state
    y = ag.critic_targets(b)
    ag.rng.bit_generator.state = state
    a2, logp2, _ = ag.sample(b.next_state)
    from evpricing.agents.ddpg import critic_forward
    qs = [critic_forward(t, b.next_state, a2)[0][:, 0] for t in ag.critic_targets_nets]
    expected = b.reward + ag.config.gamma * (np.minimum(*qs) - ag.alpha * logp2)
    assert np.allclose(y, expected)
    for _ in range(30):
        ag.update_batch(_one_step_batch(rng))
        assert ag.alpha > 0


def test_sac_deterministic_limit():
    rng = np.random.default_rng(5)
    ag = SacAgent(4, 3, AgentConfig(algorithm="SAC", actor_hidden=(6,), critic_hidden=(6,)), rng)
    W, b = ag.actor.weights(ag.actor.n_layers - 1)
    W[:, 3:] = 0
    b[3:] = -20.0  # log-std clamped at its floor
    s = rng.random((5, 4))
    a, _, _ = ag.sample(s)
    assert np.allclose(a, ag.act(s), atol=1e-6)


# -- PPO -------------------------------------------------------------------------------------

def test_gae_hand_values():
    adv, ret = gae([1.0, 1.0], [0.5, 0.5], [0.5, 0.0], [0, 1], gamma=0.9, lam=0.5)
    d1 = 1.0 - 0.5
    d0 = 1.0 + 0.9 * 0.5 - 0.5
    assert adv[1] == pytest.approx(d1) and adv[0] == pytest.approx(d0 + 0.45 * d1)
    assert np.allclose(ret, adv + 0.5)


@given(st.floats(0.01, 5), st.floats(-5, 5), st.floats(0.05, 0.5))
def test_clipped_surrogate_is_pessimistic(ratio, adv, clip):
    assert clipped_surrogate(ratio, adv, clip) <= ratio * adv + 1e-12


def test_ppo_ratio_one_and_zero_advantage():
    rng = np.random.default_rng(6)
    ag = PpoAgent(4, 3, AgentConfig(algorithm="PPO", actor_hidden=(6,), critic_hidden=(6,)), rng)
    s = rng.random((6, 4))
    mean = ag.actor(s)
    a = mean + 0.1 * rng.normal(size=mean.shape)
    from evpricing.agents.ppo import gaussian_log_prob
    old = gaussian_log_prob(a, mean, ag.log_std)
    adv = rng.normal(size=6)
    _, _, surr = ag.policy_loss_and_grads(s, a, old, adv)
    assert surr == pytest.approx(adv.mean())
    _, grads, _ = ag.policy_loss_and_grads(s, a, old, np.zeros(6))
    assert all(np.all(g == 0) for g in grads[:-1])
    assert np.allclose(grads[-1], -ag.config.entropy_coef)


def test_ppo_update_clips_and_rejects_empty():
    rng = np.random.default_rng(7)
    ag = PpoAgent(4, 3, AgentConfig(algorithm="PPO", actor_hidden=(6,), critic_hidden=(6,)), rng)
    with pytest.raises(EmptyRollout):
        ag.update_rollout(Rollout())
    for _ in range(10):
        s = rng.random(4)
        ag.act(s, explore=True)
        ag.remember(s, None, rng.normal() * 100, s, True)
    assert ag.rollout.episodes() == 10
    critic_loss, actor_loss = ag.update()
    assert np.isfinite(critic_loss) and np.isfinite(actor_loss) and len(ag.rollout) == 0
