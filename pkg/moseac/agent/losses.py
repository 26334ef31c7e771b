"""
Soft actor-critic objectives recorded on a fresh GradTape each call.

Parameter names on the tape: "critic1", "critic2", "actor", "log_temperature".
"""

from typing import Tuple

import numpy as np

from moseac.agent.critics import CriticPair, EntropyTemp, critic_input
from moseac.agent.policy import PolicyHead
from moseac.agent.reward import RewardModel, RewardParams
from moseac.core.errors import ContractViolation
from moseac.gradnet import GradTape, Node
from moseac.schemas.agent import TransitionBatch


def batch_rewards(batch: TransitionBatch, reward_model: RewardModel, params: RewardParams) -> np.ndarray:
    if reward_model.literal_storage:
        return batch.shaped_reward
    return reward_model.shape(batch.task_reward, batch.duration, params)


def bellman_targets(critics: CriticPair, head: PolicyHead, batch: TransitionBatch, temp: EntropyTemp,
                    gamma: float, rewards: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """y = r + gamma * (1 - done) * (min target Q(s', a', D') - temperature * log pi(a', D' | s'))."""
    next_controls, next_duration, next_log_prob = head.sample(batch.next_obs, rng)
    next_inputs = critic_input(batch.next_obs, next_controls, head.normalized_duration(next_duration))
    soft_value = critics.target_min(next_inputs) - temp.temperature * next_log_prob
    not_done = 1.0 - batch.done.astype(np.float64)
    return rewards + gamma * np.where(not_done > 0.0, not_done * soft_value, 0.0)


def critic_loss(critics: CriticPair, head: PolicyHead, batch: TransitionBatch, temp: EntropyTemp,
                gamma: float, params: RewardParams, reward_model: RewardModel,
                rng: np.random.Generator) -> Node:
    if batch.size == 0:
        raise ContractViolation("critic_loss on an empty batch")
    rewards = batch_rewards(batch, reward_model, params)
    targets = bellman_targets(critics, head, batch, temp, gamma, rewards, rng)[:, None]

    tape = GradTape()
    inputs = tape.const(critic_input(batch.obs, batch.controls, head.normalized_duration(batch.duration)))
    q1 = critics.q1.forward_tape(tape, inputs, tape.param(critics.q1.weights, "critic1"))
    q2 = critics.q2.forward_tape(tape, inputs, tape.param(critics.q2.weights, "critic2"))
    return (tape.mean(tape.square(q1 - targets)) + tape.mean(tape.square(q2 - targets))) * 0.5


def actor_loss(head: PolicyHead, critics: CriticPair, batch: TransitionBatch, temp: EntropyTemp,
               rng: np.random.Generator) -> Tuple[Node, np.ndarray]:
    """
    mean(temperature * log pi(a, D | s) - min Q(s, a, D)) over reparameterized samples.
    Critic weights enter as constants. Also returns the detached log-probs.
    """
    if batch.size == 0:
        raise ContractViolation("actor_loss on an empty batch")
    noise = rng.standard_normal((batch.size, head.action_dim))

    tape = GradTape()
    obs = tape.const(batch.obs)
    controls, duration, log_prob = head.rsample(tape, obs, noise, tape.param(head.net.weights, "actor"))
    inputs = tape.concat([obs, controls, duration])
    q = tape.minimum(critics.q1.forward_tape(tape, inputs), critics.q2.forward_tape(tape, inputs))
    loss = tape.mean(log_prob * temp.temperature - q)
    return loss, log_prob.value[:, 0].copy()


def temperature_loss(temp: EntropyTemp, log_probs: np.ndarray) -> Node:
    tape = GradTape()
    log_temperature = tape.param(temp.log_temperature, "log_temperature")
    gap = np.asarray(log_probs, dtype=np.float64) + temp.target_entropy
    return tape.mean(tape.exp(log_temperature) * -gap)
