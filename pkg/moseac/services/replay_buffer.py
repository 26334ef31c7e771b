from typing import Any, Dict

import numpy as np

from moseac.core.config import ACTION_CONTROLS
from moseac.core.errors import ContractViolation
from moseac.schemas.agent import Transition, TransitionBatch


class ReplayBuffer:
    """Fixed-capacity ring of transitions; the oldest entry is overwritten when full."""

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ContractViolation("replay capacity must be positive")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.obs = np.zeros((capacity, obs_dim))
        self.controls = np.zeros((capacity, ACTION_CONTROLS))
        self.duration = np.zeros(capacity)
        self.task_reward = np.zeros(capacity)
        self.shaped_reward = np.full(capacity, np.nan)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, transition: Transition) -> None:
        i = self.cursor
        self.obs[i] = transition.obs
        self.controls[i] = transition.controls
        self.duration[i] = transition.duration
        self.task_reward[i] = transition.task_reward
        self.shaped_reward[i] = transition.shaped_reward
        self.next_obs[i] = transition.next_obs
        self.done[i] = transition.done
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform, without replacement inside one batch."""
        if batch_size < 1:
            raise ContractViolation("batch_size must be positive")
        if batch_size > self.size:
            raise ContractViolation(f"cannot sample {batch_size} transitions from {self.size}")
        index = rng.choice(self.size, size=batch_size, replace=False)
        return TransitionBatch(
            obs=self.obs[index], controls=self.controls[index], duration=self.duration[index],
            task_reward=self.task_reward[index], shaped_reward=self.shaped_reward[index],
            next_obs=self.next_obs[index], done=self.done[index],
        )

    # ===============================================================
    # PERSISTENCE
    # ===============================================================

    def state_dict(self) -> Dict[str, Any]:
        n = self.size
        return {
            "obs": self.obs[:n].copy(), "controls": self.controls[:n].copy(),
            "duration": self.duration[:n].copy(), "task_reward": self.task_reward[:n].copy(),
            "shaped_reward": self.shaped_reward[:n].copy(), "next_obs": self.next_obs[:n].copy(),
            "done": self.done[:n].copy(), "cursor": self.cursor, "size": n,
        }

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        n = int(state["size"])
        if n > self.capacity or state["obs"].shape[1:] != (self.obs_dim,):
            raise ContractViolation("replay state does not fit this buffer")
        for name in ("obs", "controls", "duration", "task_reward", "shaped_reward", "next_obs", "done"):
            getattr(self, name)[:n] = state[name]
        self.cursor = int(state["cursor"])
        self.size = n


class RewardWindow:
    """Running shaped-reward sum between update blocks."""

    def __init__(self) -> None:
        self.total = 0.0
        self.steps = 0

    def add(self, shaped_reward: float) -> None:
        self.total += shaped_reward
        self.steps += 1

    def average(self) -> float:
        if self.steps == 0:
            raise ContractViolation("average of an empty reward window")
        return self.total / self.steps

    def reset(self) -> None:
        self.total = 0.0
        self.steps = 0
