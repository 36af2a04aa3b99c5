"""Soft actor-critic with twin critics and a tanh-squashed Gaussian policy on [0, 1]."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyBatch
from .buffer import Batch, ReplayBuffer
from .config import AgentConfig
from .ddpg import critic_action_grad, critic_forward, critic_loss_and_grads
from .nn import Adam, Mlp, clip_grad_norm, soft_update

LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0
_LOG_2PI = np.log(2 * np.pi)


def _softplus(x):
    return np.logaddexp(0.0, x)


def squash(u):
    """Map the unbounded sample onto [0, 1]."""
    return 0.5 * (np.tanh(u) + 1.0)


def squashed_log_prob(eps, log_std, u):
    """Per-row log density of a = (tanh(u) + 1) / 2 with u = mu + exp(log_std) * eps."""
    gauss = -0.5 * eps ** 2 - log_std - 0.5 * _LOG_2PI
    # log |da/du| = log(1/2) + log(1 - tanh(u)^2), written stably.
    log_jac = np.log(0.5) + 2.0 * (np.log(2.0) - u - _softplus(-2.0 * u))
    return np.sum(gauss - log_jac, axis=-1)


class SacAgent:
    algorithm = "SAC"

    def __init__(self, state_dim: int, action_dim: int, config: AgentConfig, rng: np.random.Generator):
        self.state_dim, self.action_dim, self.config = state_dim, action_dim, config
        self.rng = rng
        self.actor = Mlp((state_dim, *config.actor_hidden, 2 * action_dim), "identity", rng)
        self.critics = [Mlp((state_dim + action_dim, *config.critic_hidden, 1), "identity", rng) for _ in range(2)]
        self.critic_targets_nets = [c.copy() for c in self.critics]
        self.actor_opt = Adam(self.actor.params, config.learning_rate)
        self.critic_opts = [Adam(c.params, config.learning_rate) for c in self.critics]
        self.log_alpha = np.array([np.log(config.sac_alpha)])
        self.alpha_opt = Adam([self.log_alpha], config.learning_rate)
        self.target_entropy = -float(action_dim)
        self.buffer = ReplayBuffer(config.buffer_capacity, state_dim, action_dim)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def _heads(self, out):
        mu = out[..., : self.action_dim]
        raw = out[..., self.action_dim:]
        return mu, np.clip(raw, LOG_STD_MIN, LOG_STD_MAX), raw

    def sample(self, state, eps=None):
        """Reparameterized draw: returns (action, log_prob, pieces for backprop)."""
        out, cache = self.actor.forward(np.atleast_2d(state))
        mu, log_std, raw = self._heads(out)
        if eps is None:
            eps = self.rng.standard_normal(mu.shape)
        std = np.exp(log_std)
        u = mu + std * eps
        return squash(u), squashed_log_prob(eps, log_std, u), (cache, eps, std, u, raw)

    # -- acting ---------------------------------------------------------------
    def act(self, state, explore: bool = False, progress: float = 0.0) -> np.ndarray:
        if explore:
            return self.sample(state)[0][0]
        mu, _, _ = self._heads(self.actor(np.asarray(state, dtype=float)))
        return squash(mu)

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
        """r + gamma (1 - done) (min_i Q'_i(s', a') - alpha log pi(a'|s'))."""
        y = batch.reward.astype(float).copy()
        live = batch.done < 0.5
        if np.any(live):
            s2 = batch.next_state[live]
            a2, logp2, _ = self.sample(s2)
            q = np.minimum(*(critic_forward(t, s2, a2)[0][:, 0] for t in self.critic_targets_nets))
            y[live] += self.config.gamma * (q - self.alpha * logp2)
        return y

    def update_batch(self, batch: Batch) -> tuple[float, float]:
        n = len(batch)
        if n == 0:
            raise EmptyBatch("SAC update needs at least one transition")
        clip = self.config.grad_clip
        y = self.critic_targets(batch)
        critic_loss = 0.0
        for critic, opt in zip(self.critics, self.critic_opts):
            loss, grads = critic_loss_and_grads(critic, batch.state, batch.action, y)
            critic_loss += loss
            opt.step(critic.params, clip_grad_norm(grads, clip)[0])

        actor_loss, logp = self._actor_step(batch.state)

        if self.config.auto_entropy:
            # d/d log_alpha of -log_alpha * mean(logp + target_entropy)
            g = -np.mean(logp + self.target_entropy)
            self.alpha_opt.step([self.log_alpha], [np.array([g])])

        for t, c in zip(self.critic_targets_nets, self.critics):
            soft_update(t, c, self.config.tau)
        return critic_loss / 2.0, actor_loss

    def actor_loss_and_grads(self, state, eps=None):
        """Loss mean(alpha * log pi - min_i Q_i) and its gradients w.r.t. actor params."""
        n = state.shape[0]
        a, logp, (cache, eps, std, u, raw) = self.sample(state, eps)
        outs = [critic_forward(c, state, a) for c in self.critics]
        q = np.stack([o[0][:, 0] for o in outs])
        pick = np.argmin(q, axis=0)  # ties go to the first critic
        alpha = self.alpha
        loss = float(np.mean(alpha * logp - q[pick, np.arange(n)]))

        dq_da = np.zeros_like(a)
        for k, (critic, (_, qc)) in enumerate(zip(self.critics, outs)):
            seed = np.where(pick == k, -1.0 / n, 0.0)[:, None]
            if np.any(seed):
                dq_da += critic_action_grad(critic, qc, seed, self.state_dim)[1]
        t = np.tanh(u)
        g_u = dq_da * 0.5 * (1.0 - t ** 2)  # chain through the squash
        g_mu = g_u + alpha / n * 2.0 * t
        g_ls = g_u * std * eps + alpha / n * (-1.0 + 2.0 * t * std * eps)
        g_ls = np.where((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX), g_ls, 0.0)
        grads, _ = self.actor.backward(cache, np.concatenate([g_mu, g_ls], axis=1))
        return loss, grads, logp

    def _actor_step(self, state):
        loss, grads, logp = self.actor_loss_and_grads(state)
        self.actor_opt.step(self.actor.params, clip_grad_norm(grads, self.config.grad_clip)[0])
        return loss, logp

    def policy_dict(self) -> dict:
        return {"actor": self.actor.to_dict(), "critics": [c.to_dict() for c in self.critics],
                "log_alpha": float(self.log_alpha[0])}

    def load_policy(self, data: dict) -> None:
        self.actor = Mlp.from_dict(data["actor"])
        self.critics = [Mlp.from_dict(c) for c in data["critics"]]
        self.critic_targets_nets = [c.copy() for c in self.critics]
        self.log_alpha = np.array([float(data["log_alpha"])])
        self.actor_opt = Adam(self.actor.params, self.config.learning_rate)
        self.critic_opts = [Adam(c.params, self.config.learning_rate) for c in self.critics]
        self.alpha_opt = Adam([self.log_alpha], self.config.learning_rate)
