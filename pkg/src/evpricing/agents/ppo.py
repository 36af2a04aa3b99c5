"""Clipped-surrogate policy optimization with a Gaussian policy and a state-value critic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyRollout
from .config import AgentConfig
from .nn import Adam, Mlp, clip_grad_norm

_HALF_LOG_2PI_E = 0.5 * np.log(2 * np.pi * np.e)


def gaussian_log_prob(action, mean, log_std):
    z = (action - mean) / np.exp(log_std)
    return np.sum(-0.5 * z ** 2 - log_std - 0.5 * np.log(2 * np.pi), axis=-1)


def gae(rewards, values, next_values, dones, gamma: float, lam: float):
    """Generalized advantage estimates and value targets for one ordered rollout."""
    rewards, values, next_values, dones = (np.asarray(x, dtype=float) for x in (rewards, values, next_values, dones))
    adv = np.zeros_like(rewards)
    running = 0.0
    for t in range(rewards.size - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * live * next_values[t] - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
    return adv, adv + values


def clipped_surrogate(ratio, adv, clip: float):
    """Per-sample min(r A, clip(r) A)."""
    return np.minimum(ratio * adv, np.clip(ratio, 1 - clip, 1 + clip) * adv)


@dataclass
class Rollout:
    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    next_states: list = field(default_factory=list)
    dones: list = field(default_factory=list)

    def __len__(self):
        return len(self.rewards)

    def add(self, state, action, log_prob, reward, next_state, done):
        self.states.append(np.asarray(state, dtype=float))
        self.actions.append(np.asarray(action, dtype=float))
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.next_states.append(np.asarray(next_state, dtype=float))
        self.dones.append(float(done))

    def episodes(self) -> int:
        return int(sum(self.dones))


class PpoAgent:
    algorithm = "PPO"

    def __init__(self, state_dim: int, action_dim: int, config: AgentConfig, rng: np.random.Generator):
        self.state_dim, self.action_dim, self.config = state_dim, action_dim, config
        self.rng = rng
        self.actor = Mlp((state_dim, *config.actor_hidden, action_dim), "sigmoid", rng)
        self.log_std = np.full(action_dim, config.ppo_init_log_std)
        self.critic = Mlp((state_dim, *config.critic_hidden, 1), "identity", rng)
        self.actor_opt = Adam(self.actor.params + [self.log_std], config.learning_rate)
        self.critic_opt = Adam(self.critic.params, config.learning_rate)
        self.rollout = Rollout()
        self._last_log_prob = 0.0
        self._last_raw = None

    # -- acting ---------------------------------------------------------------
    def act(self, state, explore: bool = False, progress: float = 0.0) -> np.ndarray:
        mean = self.actor(np.asarray(state, dtype=float))
        if not explore:
            return mean
        raw = mean + np.exp(self.log_std) * self.rng.standard_normal(mean.shape)
        self._last_raw = raw
        self._last_log_prob = float(gaussian_log_prob(raw, mean, self.log_std))
        # The environment sees the clipped action; the stored sample stays raw.
        return np.clip(raw, 0.0, 1.0)

    def remember(self, state, action, reward, next_state, done) -> None:
        raw = self._last_raw if self._last_raw is not None else np.asarray(action, dtype=float)
        self.rollout.add(state, raw, self._last_log_prob, reward, next_state, done)
        self._last_raw = None

    def ready(self) -> bool:
        return self.rollout.episodes() >= self.config.rollout_episodes

    def update(self):
        out = self.update_rollout(self.rollout)
        self.rollout = Rollout()
        return out

    # -- learning -------------------------------------------------------------
    def advantages(self, ro: Rollout):
        s, s2 = np.array(ro.states), np.array(ro.next_states)
        v = self.critic(s)[:, 0]
        v2 = self.critic(s2)[:, 0]
        return gae(ro.rewards, v, v2, ro.dones, self.config.gamma, self.config.gae_lambda)

    def policy_loss_and_grads(self, states, actions, old_log_probs, adv):
        """Negative clipped surrogate minus the entropy bonus, with gradients.

        Returns (loss, grads over actor params + [log_std], surrogate mean).
        """
        c = self.config
        n = states.shape[0]
        mean, cache = self.actor.forward(states)
        std = np.exp(self.log_std)
        logp = gaussian_log_prob(actions, mean, self.log_std)
        ratio = np.exp(logp - old_log_probs)
        surr = clipped_surrogate(ratio, adv, c.ppo_clip)
        entropy = float(np.sum(self.log_std) + self.action_dim * _HALF_LOG_2PI_E)
        loss = float(-np.mean(surr) - c.entropy_coef * entropy)

        # The gradient flows only where the unclipped term is the active minimum.
        clipped = ((adv > 0) & (ratio > 1 + c.ppo_clip)) | ((adv < 0) & (ratio < 1 - c.ppo_clip))
        d_logp = np.where(clipped, 0.0, -ratio * adv / n)  # dLoss/dlogp
        z = (actions - mean) / std
        g_mean = d_logp[:, None] * z / std
        g_log_std = np.sum(d_logp[:, None] * (z ** 2 - 1.0), axis=0) - c.entropy_coef
        grads, _ = self.actor.backward(cache, g_mean)
        return loss, grads + [g_log_std], float(np.mean(surr))

    def value_loss_and_grads(self, states, returns):
        n = states.shape[0]
        v, cache = self.critic.forward(states)
        err = v[:, 0] - returns
        grads, _ = self.critic.backward(cache, (2.0 / n * err)[:, None])
        return float(np.mean(err ** 2)), grads

    def update_rollout(self, ro: Rollout) -> tuple[float, float]:
        if len(ro) == 0:
            raise EmptyRollout("PPO update needs a non-empty rollout")
        c = self.config
        adv, returns = self.advantages(ro)
        if adv.size > 1 and adv.std() > 1e-12:
            adv = (adv - adv.mean()) / adv.std()
        states, actions = np.array(ro.states), np.array(ro.actions)
        old = np.array(ro.log_probs)
        n = len(ro)
        a_losses, c_losses = [], []
        for _ in range(c.ppo_epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, c.ppo_minibatch):
                idx = order[start:start + c.ppo_minibatch]
                loss, grads, _ = self.policy_loss_and_grads(states[idx], actions[idx], old[idx], adv[idx])
                grads, _ = clip_grad_norm(grads, c.grad_clip)
                self.actor_opt.step(self.actor.params + [self.log_std], grads)
                np.clip(self.log_std, -20.0, 2.0, out=self.log_std)
                vloss, vgrads = self.value_loss_and_grads(states[idx], returns[idx])
                self.critic_opt.step(self.critic.params, clip_grad_norm(vgrads, c.grad_clip)[0])
                a_losses.append(loss)
                c_losses.append(vloss)
        return float(np.mean(c_losses)), float(np.mean(a_losses))

    def policy_dict(self) -> dict:
        return {"actor": self.actor.to_dict(), "log_std": self.log_std.tolist(), "critic": self.critic.to_dict()}

    def load_policy(self, data: dict) -> None:
        self.actor = Mlp.from_dict(data["actor"])
        self.log_std = np.asarray(data["log_std"], dtype=float)
        self.critic = Mlp.from_dict(data["critic"])
        self.actor_opt = Adam(self.actor.params + [self.log_std], self.config.learning_rate)
        self.critic_opt = Adam(self.critic.params, self.config.learning_rate)
