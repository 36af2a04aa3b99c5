from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyBatch


@dataclass
class Batch:
    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_state: np.ndarray
    done: np.ndarray

    def __len__(self):
        return int(self.reward.shape[0])


class ReplayBuffer:
    """Fixed-capacity ring of (s, a, r, s', done); the oldest entry is overwritten first."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.state = np.zeros((capacity, state_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros(capacity)
        self.next_state = np.zeros((capacity, state_dim))
        self.done = np.zeros(capacity)
        self._next = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, state, action, reward, next_state, done) -> None:
        i = self._next
        self.state[i] = state
        self.action[i] = action
        self.reward[i] = reward
        self.next_state[i] = next_state
        self.done[i] = float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size == 0 or batch_size < 1:
            raise EmptyBatch("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.state[idx], self.action[idx], self.reward[idx], self.next_state[idx], self.done[idx])

    def to_dict(self) -> dict:
        n = self.size
        order = (np.arange(n) + (self._next - n)) % self.capacity  # oldest first
        return {
            "capacity": self.capacity,
            "state": self.state[order].tolist(), "action": self.action[order].tolist(),
            "reward": self.reward[order].tolist(), "next_state": self.next_state[order].tolist(),
            "done": self.done[order].tolist(),
        }

    def load_dict(self, data: dict) -> None:
        self.__init__(int(data["capacity"]), self.state.shape[1], self.action.shape[1])
        for row in zip(data["state"], data["action"], data["reward"], data["next_state"], data["done"]):
            self.add(*row)
