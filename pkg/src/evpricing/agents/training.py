"""Joint training of the residential and commercial pricing agents."""

from __future__ import annotations

import csv
import json
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import ArchitectureMismatch, ConfigError, MissingModel
from ..seeding import rng_for
from .config import AgentConfig
from .ddpg import DdpgAgent
from .ppo import PpoAgent
from .sac import SacAgent

log = logging.getLogger(__name__)

AGENT_NAMES = ("res", "com")
MODEL_FORMAT = "evpricing.agents"
MODEL_VERSION = 1
TRACE_HEADER = ("episode", "agent", "reward", "actor_loss", "critic_loss")

_CLASSES = {"DDPG": DdpgAgent, "SAC": SacAgent, "PPO": PpoAgent}


def make_agent(config: AgentConfig, state_dim: int, action_dim: int, rng: np.random.Generator):
    return _CLASSES[config.algorithm](state_dim, action_dim, config, rng)


@dataclass
class TrainResult:
    """Per-episode traces, one column per agent (res, com); losses are NaN when no update ran."""

    rewards: np.ndarray
    actor_loss: np.ndarray
    critic_loss: np.ndarray
    agents: tuple
    start_episode: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def total_reward(self) -> np.ndarray:
        return self.rewards.sum(axis=1)

    def window_mean(self, fraction: float = 0.1, last: bool = True) -> float:
        """Mean summed reward over the first or last ``fraction`` of episodes."""
        n = self.rewards.shape[0]
        k = max(1, int(round(fraction * n)))
        part = self.total_reward[-k:] if last else self.total_reward[:k]
        return float(np.mean(part))

    def trace_rows(self):
        for i in range(self.rewards.shape[0]):
            for j, name in enumerate(AGENT_NAMES):
                yield (self.start_episode + i, name, repr(float(self.rewards[i, j])),
                       repr(float(self.actor_loss[i, j])), repr(float(self.critic_loss[i, j])))

    def write_trace(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            w.writerows(self.trace_rows())


@dataclass
class _Session:
    """Everything needed to continue a run bit-for-bit."""

    agents: tuple
    env_rng_state: dict
    episode: int
    total_episodes: int
    rewards: list
    actor_loss: list
    critic_loss: list


def _run_episode(env, agents, explore: bool, progress: float, warmup: Sequence[bool]):
    states = env.reset()
    total = np.zeros(len(agents))
    done = False
    while not done:
        actions = [ag.random_action() if warm else ag.act(s, explore, progress)
                   for ag, s, warm in zip(agents, states, warmup)]
        next_states, rewards, done, _ = env.step(*actions)
        for ag, s, a, r, s2 in zip(agents, states, actions, rewards, next_states):
            ag.remember(s, a, r, s2, done)
        total += rewards
        states = next_states
    return total


def train(
    env,
    configs: Sequence[AgentConfig],
    episodes: int | None = None,
    seed: int = 0,
    checkpoint: str | Path | None = None,
    checkpoint_every: int = 0,
    resume: str | Path | None = None,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> TrainResult:
    """Train one agent per network against ``env``.

    ``episodes`` defaults to the first config's ``episodes``. With
    ``resume`` the run continues from a checkpoint file; episode numbering
    and every random stream continue where they stopped, so a resumed run
    matches an uninterrupted one.
    """
    if len(configs) != 2:
        raise ConfigError("need exactly two agent configs (residential, commercial)")
    total = int(episodes if episodes is not None else configs[0].episodes)
    if resume is not None:
        with Path(resume).open("rb") as fh:
            sess: _Session = pickle.load(fh)
        env.rng.bit_generator.state = sess.env_rng_state
        agents = sess.agents
        if total < sess.episode:
            raise ConfigError("requested episodes are fewer than those already trained")
        sess.total_episodes = total
    else:
        env.rng = rng_for(seed, "env")
        agents = tuple(
            make_agent(cfg, env.state_dim, env.action_dim, rng_for(seed, f"agent:{name}"))
            for cfg, name in zip(configs, AGENT_NAMES)
        )
        sess = _Session(agents, env.rng.bit_generator.state, 0, total, [], [], [])

    for ep in range(sess.episode, total):
        progress = ep / max(total - 1, 1)
        warm = [ep < ag.config.warmup_episodes and ag.algorithm != "PPO" for ag in agents]
        ep_reward = _run_episode(env, agents, explore=True, progress=progress, warmup=warm)
        a_loss, c_loss = np.full(2, np.nan), np.full(2, np.nan)
        for j, ag in enumerate(agents):
            if warm[j] or not ag.ready():
                continue
            if ag.algorithm == "PPO":
                c_loss[j], a_loss[j] = ag.update()
            else:
                outs = [ag.update() for _ in range(ag.config.updates_per_episode)]
                c_loss[j] = np.mean([o[0] for o in outs])
                a_loss[j] = np.mean([o[1] for o in outs])
        sess.rewards.append(ep_reward)
        sess.actor_loss.append(a_loss)
        sess.critic_loss.append(c_loss)
        sess.episode = ep + 1
        if callback is not None:
            callback(ep, ep_reward)
        if checkpoint is not None and checkpoint_every > 0 and sess.episode % checkpoint_every == 0:
            save_checkpoint(sess, env, checkpoint)
    if checkpoint is not None:
        save_checkpoint(sess, env, checkpoint)

    return TrainResult(
        rewards=np.array(sess.rewards).reshape(-1, 2),
        actor_loss=np.array(sess.actor_loss).reshape(-1, 2),
        critic_loss=np.array(sess.critic_loss).reshape(-1, 2),
        agents=agents,
    )


def save_checkpoint(sess: _Session, env, path) -> None:
    sess.env_rng_state = env.rng.bit_generator.state
    tmp = Path(str(path) + ".tmp")
    with tmp.open("wb") as fh:
        pickle.dump(sess, fh)
    tmp.replace(path)


def checkpoint_episode(path) -> int:
    with Path(path).open("rb") as fh:
        return pickle.load(fh).episode


# -- model files ----------------------------------------------------------------

def save_agents(agents, path, metadata: dict | None = None) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "metadata": metadata or {},
        "agents": {
            name: {"config": ag.config.to_dict(), "state_dim": ag.state_dim, "action_dim": ag.action_dim,
                   "policy": ag.policy_dict()}
            for name, ag in zip(AGENT_NAMES, agents)
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_agents(path, seed: int = 0) -> tuple:
    p = Path(path)
    if not p.is_file():
        raise MissingModel(f"no trained agents at {p}")
    doc = json.loads(p.read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ArchitectureMismatch(f"{p} is not an agents file")
    if doc.get("version") != MODEL_VERSION:
        raise ArchitectureMismatch(f"unsupported agents file version {doc.get('version')}")
    out = []
    for name in AGENT_NAMES:
        entry = doc["agents"][name]
        cfg = AgentConfig.from_dict(entry["config"])
        ag = make_agent(cfg, entry["state_dim"], entry["action_dim"], rng_for(seed, f"agent:{name}"))
        ag.load_policy(entry["policy"])
        out.append(ag)
    return tuple(out)


def agents_metadata(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise MissingModel(f"no trained agents at {p}")
    return json.loads(p.read_text(encoding="utf-8")).get("metadata", {})
