from moseac.agent.agent import Agent, UpdateStats
from moseac.agent.critics import CriticPair, EntropyTemp, critic_input
from moseac.agent.losses import actor_loss, critic_loss, temperature_loss
from moseac.agent.policy import PolicyHead
from moseac.agent.reward import (
    RewardModel, RewardParams, adapt_alpha, alpha_eps_of, seac_shape_reward, shape_reward,
)

__all__ = [
    "Agent", "UpdateStats", "CriticPair", "EntropyTemp", "PolicyHead", "RewardModel", "RewardParams",
    "critic_input", "critic_loss", "actor_loss", "temperature_loss",
    "shape_reward", "seac_shape_reward", "alpha_eps_of", "adapt_alpha",
]
