"""Deterministic policy gradient learner with target networks and replay."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyBatch
from .buffer import Batch, ReplayBuffer
from .config import AgentConfig
from .nn import Adam, Mlp, clip_grad_norm, soft_update


def critic_forward(critic: Mlp, state, action):
    return critic.forward(np.concatenate([state, action], axis=1))


def critic_action_grad(critic: Mlp, cache, grad_q, state_dim: int):
    """Param grads of the critic and dQ/da for a seeded output gradient."""
    grads, g_in = critic.backward(cache, grad_q)
    return grads, g_in[:, state_dim:]


def critic_loss_and_grads(critic: Mlp, state, action, y):
    """Mean squared TD error of ``critic`` against fixed targets ``y`` and its gradients."""
    n = state.shape[0]
    q, cache = critic_forward(critic, state, action)
    err = q[:, 0] - y
    grads, _ = critic.backward(cache, (2.0 / n * err)[:, None])
    return float(np.mean(err ** 2)), grads


class DdpgAgent:
    algorithm = "DDPG"

    def __init__(self, state_dim: int, action_dim: int, config: AgentConfig, rng: np.random.Generator):
        self.state_dim, self.action_dim, self.config = state_dim, action_dim, config
        self.rng = rng
        self.actor = Mlp((state_dim, *config.actor_hidden, action_dim), "sigmoid", rng)
        self.critic = Mlp((state_dim + action_dim, *config.critic_hidden, 1), "identity", rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, config.learning_rate)
        self.critic_opt = Adam(self.critic.params, config.learning_rate)
        self.buffer = ReplayBuffer(config.buffer_capacity, state_dim, action_dim)

    # -- acting ---------------------------------------------------------------
    def act(self, state, explore: bool = False, progress: float = 0.0) -> np.ndarray:
        a = self.actor(np.asarray(state, dtype=float))
        if explore:
            c = self.config
            sigma = c.noise_start + (c.noise_end - c.noise_start) * min(max(progress, 0.0), 1.0)
            a = np.clip(a + sigma * self.rng.standard_normal(a.shape), 0.0, 1.0)
        return a

    def random_action(self) -> np.ndarray:
        return self.rng.random(self.action_dim)

    def remember(self, state, action, reward, next_state, done) -> None:
        self.buffer.add(state, action, reward, next_state, done)

    def ready(self) -> bool:
        return len(self.buffer) >= self.config.batch_size

    def update(self):
        return self.update_batch(self.buffer.sample(self.config.batch_size, self.rng))

    # -- learning -------------------------------------------------------------
    def critic_targets(self, batch: Batch) -> np.ndarray:
        """y = r + gamma * (1 - done) * Q'(s', mu'(s')); equals r when done."""
        y = batch.reward.astype(float).copy()
        live = batch.done < 0.5
        if np.any(live):
            s2 = batch.next_state[live]
            q2, _ = critic_forward(self.critic_target, s2, self.actor_target(s2))
            y[live] += self.config.gamma * q2[:, 0]
        return y

    def update_batch(self, batch: Batch) -> tuple[float, float]:
        n = len(batch)
        if n == 0:
            raise EmptyBatch("DDPG update needs at least one transition")
        clip = self.config.grad_clip

        y = self.critic_targets(batch)
        critic_loss, grads = critic_loss_and_grads(self.critic, batch.state, batch.action, y)
        self.critic_opt.step(self.critic.params, clip_grad_norm(grads, clip)[0])

        actor_loss, grads = self.actor_loss_and_grads(batch.state)
        self.actor_opt.step(self.actor.params, clip_grad_norm(grads, clip)[0])

        soft_update(self.actor_target, self.actor, self.config.tau)
        soft_update(self.critic_target, self.critic, self.config.tau)
        return critic_loss, actor_loss

    def actor_loss_and_grads(self, state):
        """Loss -mean Q(s, mu(s)) and its gradients w.r.t. the actor parameters."""
        n = state.shape[0]
        a, a_cache = self.actor.forward(state)
        q_pi, q_cache = critic_forward(self.critic, state, a)
        _, dq_da = critic_action_grad(self.critic, q_cache, np.full((n, 1), -1.0 / n), self.state_dim)
        grads, _ = self.actor.backward(a_cache, dq_da)
        return float(-np.mean(q_pi)), grads

    def policy_dict(self) -> dict:
        return {"actor": self.actor.to_dict(), "critic": self.critic.to_dict()}

    def load_policy(self, data: dict) -> None:
        self.actor = Mlp.from_dict(data["actor"])
        self.critic = Mlp.from_dict(data["critic"])
        self.actor_target, self.critic_target = self.actor.copy(), self.critic.copy()
        self.actor_opt = Adam(self.actor.params, self.config.learning_rate)
        self.critic_opt = Adam(self.critic.params, self.config.learning_rate)
