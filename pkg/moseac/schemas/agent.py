import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class Transition(BaseModel):
    """
    One decision step as stored in the replay buffer. The raw task reward and
    the snapped duration are kept so rewards can be reshaped with the current
    RewardParams; `shaped_reward` is only filled in literal storage mode.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    obs: np.ndarray
    controls: np.ndarray = Field(..., description="gas, brake, steer")
    duration: float = Field(..., gt=0, description="Snapped duration, seconds")
    task_reward: float
    shaped_reward: float = float("nan")
    next_obs: np.ndarray
    done: bool


class TransitionBatch(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    obs: np.ndarray
    controls: np.ndarray
    duration: np.ndarray
    task_reward: np.ndarray
    shaped_reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray

    @property
    def size(self) -> int:
        return int(self.obs.shape[0])
