"""
Reward shaping for the three training variants.

MOSEAC multiplies the task reward by a duration factor and an adaptive
magnitude alpha_m, then subtracts a per-decision penalty alpha_eps that
shrinks as alpha_m grows. SEAC uses a fixed linear combination, and the
fixed-rate baseline learns from the task reward itself.
"""

import logging
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
from scipy.special import expit

from moseac.core.config import (
    ALPHA_EPS_SCALE, ALPHA_M_INIT, ALPHA_MAX, D_MIN, DELTA_TREND, PSI, SEAC_EPS_PEN, SEAC_TAU_PEN,
)
from moseac.schemas.config import Algo

logger = logging.getLogger(__name__)

Scalar = Union[float, np.ndarray]


def alpha_eps_of(alpha_m: float) -> float:
    """0.2 * (1 - 1 / (1 + exp(1 - alpha_m))), i.e. 0.2 * sigmoid(1 - alpha_m)."""
    return float(ALPHA_EPS_SCALE * expit(1.0 - alpha_m))


class RewardParams(BaseModel):
    """Adaptive shaping state. alpha_eps is derived, never stored."""
    model_config = ConfigDict(frozen=True)

    alpha_m: float = Field(default=ALPHA_M_INIT, ge=0.0, description="Reward magnitude scale")
    alpha_max: float = Field(default=ALPHA_MAX, gt=0.0, description="Hard cap on alpha_m")
    psi: float = Field(default=PSI, gt=0.0, description="alpha_m increment per declining window")
    prev_avg_reward: Optional[float] = Field(default=None, description="Average of the previous reward window")

    @computed_field
    @property
    def alpha_eps(self) -> float:
        return alpha_eps_of(self.alpha_m)

    @model_validator(mode="after")
    def check_cap(self) -> "RewardParams":
        if self.alpha_m > self.alpha_max:
            raise ValueError(f"alpha_m ({self.alpha_m}) exceeds alpha_max ({self.alpha_max})")
        return self


def duration_factor(duration: Scalar, d_min: float = D_MIN) -> Scalar:
    """R_tau(D) = D_min / D: 1 at the fastest control rate, D_min/D_max at the slowest."""
    return d_min / duration


def shape_reward(task_reward: Scalar, duration: Scalar, params: RewardParams, d_min: float = D_MIN) -> Scalar:
    return params.alpha_m * task_reward * duration_factor(duration, d_min) - params.alpha_eps


def seac_shape_reward(task_reward: Scalar, duration: Scalar, eps_pen: float = SEAC_EPS_PEN,
                      tau_pen: float = SEAC_TAU_PEN) -> Scalar:
    return task_reward - eps_pen - tau_pen * duration


def adapt_alpha(params: RewardParams, current_avg_reward: float, delta_trend: float = DELTA_TREND) -> RewardParams:
    """
    Raises alpha_m by psi (capped at alpha_max) when the window average fell
    below the previous one. The current average always becomes the reference.
    """
    declining = params.prev_avg_reward is not None and current_avg_reward < params.prev_avg_reward - delta_trend
    alpha_m = params.alpha_m
    if declining:
        alpha_m = min(params.alpha_m + params.psi, params.alpha_max)
        if alpha_m != params.alpha_m:
            logger.info(f"📈 Reward trend declining ({params.prev_avg_reward:.6f} -> {current_avg_reward:.6f}), "
                        f"alpha_m {params.alpha_m:.4f} -> {alpha_m:.4f}")
    return params.model_copy(update={"alpha_m": alpha_m, "prev_avg_reward": current_avg_reward})


class RewardModel:
    """Maps raw (task reward, duration) pairs to the reward an algorithm learns from."""

    def __init__(self, algo: Algo, d_min: float = D_MIN, task_reward_scale: float = 1.0,
                 eps_pen: float = SEAC_EPS_PEN, tau_pen: float = SEAC_TAU_PEN,
                 literal_storage: bool = False):
        self.algo = algo
        self.d_min = d_min
        self.task_reward_scale = task_reward_scale
        self.eps_pen = eps_pen
        self.tau_pen = tau_pen
        self.literal_storage = literal_storage

    @property
    def adaptive(self) -> bool:
        return self.algo is Algo.MOSEAC

    def shape(self, task_reward: Scalar, duration: Scalar, params: RewardParams) -> Scalar:
        scaled = self.task_reward_scale * task_reward
        if self.algo is Algo.MOSEAC:
            return shape_reward(scaled, duration, params, self.d_min)
        if self.algo is Algo.SEAC:
            return seac_shape_reward(scaled, duration, self.eps_pen, self.tau_pen)
        return scaled
