"""Actor-critic learners (DDPG, SAC, PPO) built on a small numpy network core."""

from .buffer import Batch, ReplayBuffer
from .config import ALGORITHMS, AgentConfig
from .ddpg import DdpgAgent
from .nn import Adam, Mlp, clip_grad_norm, global_norm, soft_update
from .ppo import PpoAgent, Rollout
from .sac import SacAgent
from .training import TrainResult, load_agents, make_agent, save_agents, train

__all__ = [
    "ALGORITHMS", "Adam", "AgentConfig", "Batch", "DdpgAgent", "Mlp", "PpoAgent", "ReplayBuffer",
    "Rollout", "SacAgent", "TrainResult", "clip_grad_norm", "global_norm", "load_agents", "make_agent",
    "save_agents", "soft_update", "train",
]
