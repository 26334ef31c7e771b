import logging
import math
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel

from moseac.agent.critics import CriticPair, EntropyTemp
from moseac.agent.losses import actor_loss, critic_loss, temperature_loss
from moseac.agent.policy import PolicyHead
from moseac.agent.reward import RewardModel, RewardParams, adapt_alpha
from moseac.core.config import ACTION_CONTROLS, FINAL_ACTOR_INIT_BOUND
from moseac.core.errors import TrainingDivergenceError
from moseac.gradnet import DenseNet, Node, OptimState, opt_step
from moseac.schemas.agent import TransitionBatch
from moseac.schemas.config import Algo, TrainConfig
from moseac.schemas.track import DurationRange, ElasticAction

logger = logging.getLogger(__name__)


class UpdateStats(BaseModel):
    critic_loss: float
    actor_loss: float
    temperature_loss: float
    grad_norm: float


class Agent:
    """
    Policy, twin critics, entropy temperature and reward shaping state of one
    training run, with one optimizer per parameter vector. Owned by the
    training thread; hand `snapshot()` copies to anything running elsewhere.
    """

    def __init__(self, head: PolicyHead, critics: CriticPair, temp: EntropyTemp,
                 reward_model: RewardModel, params: RewardParams, config: TrainConfig):
        self.head = head
        self.critics = critics
        self.temp = temp
        self.reward_model = reward_model
        self.params = params
        self.config = config
        self.opt_actor = self._optimizer(head.net.n_params, config.lr_actor)
        self.opt_critic1 = self._optimizer(critics.q1.n_params, config.lr_critic)
        self.opt_critic2 = self._optimizer(critics.q2.n_params, config.lr_critic)
        self.opt_temperature = self._optimizer(1, config.lr_temperature)
        self.last_actor_grad: Optional[np.ndarray] = None

    def _optimizer(self, n_params: int, base_rate: float) -> OptimState:
        return OptimState(n_params, base_rate, self.config.lr_schedule, self.config.lr_decay_steps)

    @classmethod
    def build(cls, config: TrainConfig, obs_dim: int, rng: np.random.Generator) -> "Agent":
        """Fresh networks for `config`; actor first, then the two critics, all drawn from `rng`."""
        durations = DurationRange(d_min=config.d_min, d_max=config.d_max)
        fixed = config.fixed_duration if config.algo is Algo.SAC_FIXED else None
        hidden = [config.hidden_width] * config.hidden_layers

        actor = DenseNet.initialize([obs_dim, *hidden, 2 * config.action_dim], rng,
                                    hidden_activation=config.hidden_activation,
                                    final_bound=FINAL_ACTOR_INIT_BOUND)
        head = PolicyHead(actor, durations, fixed)
        critics = CriticPair.initialize(obs_dim + ACTION_CONTROLS + 1, hidden, rng, config.hidden_activation)
        temp = EntropyTemp.from_temperature(config.init_temperature, config.target_entropy)
        reward_model = RewardModel(config.algo, config.d_min, config.task_reward_scale,
                                   config.eps_pen, config.tau_pen, config.literal_reward_storage)
        params = RewardParams(alpha_m=config.alpha_m_init, alpha_max=config.alpha_max, psi=config.psi)
        return cls(head, critics, temp, reward_model, params, config)

    # ===============================================================
    # ACTING AND SHAPING
    # ===============================================================

    def act(self, obs: np.ndarray, rng: np.random.Generator, deterministic: bool = False) -> ElasticAction:
        return self.head.act(obs, rng, deterministic)

    def shaped_reward(self, task_reward: float, duration: float) -> float:
        return float(self.reward_model.shape(task_reward, duration, self.params))

    def adapt(self, current_avg_reward: float) -> RewardParams:
        """Trend hook after an update block; only MOSEAC moves alpha_m."""
        if self.reward_model.adaptive:
            self.params = adapt_alpha(self.params, current_avg_reward, self.config.delta_trend)
        else:
            self.params = self.params.model_copy(update={"prev_avg_reward": current_avg_reward})
        return self.params

    def snapshot(self) -> PolicyHead:
        return self.head.copy()

    # ===============================================================
    # UPDATES
    # ===============================================================

    def update(self, batch: TransitionBatch, rng: np.random.Generator) -> UpdateStats:
        """One gradient step each for the critics, the actor and the temperature."""
        # 1. Critics
        loss_c = critic_loss(self.critics, self.head, batch, self.temp, self.config.gamma,
                             self.params, self.reward_model, rng)
        self._check_finite("critic", loss_c, batch)
        grads = loss_c.tape.backward(loss_c)
        self.critics.q1.weights = opt_step(self.opt_critic1, self.critics.q1.weights, grads["critic1"])
        self.critics.q2.weights = opt_step(self.opt_critic2, self.critics.q2.weights, grads["critic2"])

        # 2. Actor, against the freshly updated critics
        loss_a, log_probs = actor_loss(self.head, self.critics, batch, self.temp, rng)
        self._check_finite("actor", loss_a, batch)
        grads = loss_a.tape.backward(loss_a)
        self.last_actor_grad = grads["actor"]
        self.head.net.weights = opt_step(self.opt_actor, self.head.net.weights, grads["actor"])

        # 3. Temperature
        loss_t = temperature_loss(self.temp, log_probs)
        self._check_finite("temperature", loss_t, batch)
        grads = loss_t.tape.backward(loss_t)
        self.temp.log_temperature = opt_step(self.opt_temperature, self.temp.log_temperature,
                                             grads["log_temperature"])

        return UpdateStats(critic_loss=loss_c.item(), actor_loss=loss_a.item(),
                           temperature_loss=loss_t.item(), grad_norm=self.grad_norm())

    def soft_update(self, tau_soft: Optional[float] = None) -> None:
        self.critics.soft_update(self.config.tau_soft if tau_soft is None else tau_soft)

    def grad_norm(self) -> float:
        """L2 norm of the most recent actor gradient; nan before the first update."""
        if self.last_actor_grad is None:
            return math.nan
        return float(np.linalg.norm(self.last_actor_grad))

    def _check_finite(self, which: str, loss: Node, batch: TransitionBatch) -> None:
        if np.isfinite(loss.value).all():
            return
        raise TrainingDivergenceError(f"non-finite {which} loss", self.diagnostics(batch, which, loss.item()))

    def diagnostics(self, batch: TransitionBatch, which: str = "", loss: float = math.nan) -> Dict[str, Any]:
        return {
            "failed_loss": which,
            "loss_value": loss,
            "alpha_m": self.params.alpha_m,
            "alpha_eps": self.params.alpha_eps,
            "temperature": self.temp.temperature,
            "log_temperature": float(self.temp.log_temperature[0]),
            "actor_step": self.opt_actor.step,
            "batch_size": batch.size,
            "batch_task_reward_mean": float(np.mean(batch.task_reward)),
            "batch_duration_mean": float(np.mean(batch.duration)),
            "batch_obs_abs_max": float(np.max(np.abs(batch.obs))),
            "batch": {
                "task_reward": batch.task_reward.tolist(),
                "duration": batch.duration.tolist(),
                "done": batch.done.astype(bool).tolist(),
            },
        }
