from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Literal

from ..errors import ConfigError

Algorithm = Literal["DDPG", "SAC", "PPO"]
ALGORITHMS = ("DDPG", "SAC", "PPO")


@dataclass(frozen=True)
class AgentConfig:
    """Hyperparameters shared by the three actor-critic learners.

    Fields that do not apply to an algorithm are ignored by it (``tau`` by
    PPO, the ``ppo_*`` fields by DDPG and SAC, and so on).
    """

    algorithm: Algorithm = "DDPG"
    gamma: float = 0.99
    tau: float = 0.005
    learning_rate: float = 3e-4
    actor_hidden: tuple[int, ...] = (64, 64)
    critic_hidden: tuple[int, ...] = (64, 64)
    sac_alpha: float = 0.2
    auto_entropy: bool = True
    ppo_clip: float = 0.2
    gae_lambda: float = 0.95
    ppo_epochs: int = 4
    entropy_coef: float = 0.001
    grad_clip: float = 0.5
    episodes: int = 15000
    batch_size: int = 64
    buffer_capacity: int = 100_000
    noise_start: float = 0.2
    noise_end: float = 0.02
    warmup_episodes: int = 64
    updates_per_episode: int = 4
    rollout_episodes: int = 32
    ppo_minibatch: int = 32
    ppo_init_log_std: float = -1.0

    def __post_init__(self):
        algo = str(self.algorithm).upper()
        if algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        object.__setattr__(self, "algorithm", algo)
        object.__setattr__(self, "actor_hidden", tuple(int(h) for h in self.actor_hidden))
        object.__setattr__(self, "critic_hidden", tuple(int(h) for h in self.critic_hidden))
        checks = [
            (0.0 <= self.gamma <= 1.0, "gamma must lie in [0, 1]"),
            (0.0 < self.tau <= 1.0, "tau must lie in (0, 1]"),
            (self.learning_rate > 0, "learning_rate must be positive"),
            (self.sac_alpha > 0, "sac_alpha must be positive"),
            (0.0 < self.ppo_clip < 1.0, "ppo_clip must lie in (0, 1)"),
            (0.0 <= self.gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]"),
            (self.entropy_coef >= 0, "entropy_coef must be non-negative"),
            (self.grad_clip > 0, "grad_clip must be positive"),
            (0.0 <= self.noise_end <= self.noise_start, "need 0 <= noise_end <= noise_start"),
            (self.warmup_episodes >= 0, "warmup_episodes must be non-negative"),
            (self.ppo_init_log_std <= 2.0, "ppo_init_log_std must be at most 2"),
        ]
        for name in ("episodes", "batch_size", "buffer_capacity", "ppo_epochs", "updates_per_episode",
                     "rollout_episodes", "ppo_minibatch"):
            checks.append((int(getattr(self, name)) >= 1, f"{name} must be >= 1"))
        checks.append((all(h >= 1 for h in self.actor_hidden + self.critic_hidden), "hidden sizes must be >= 1"))
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown agent config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
