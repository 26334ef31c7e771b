"""
Stability monitor: V = 1/2 * alpha_m^2 + sum over probes of (Q - Q*)^2.

Q* has no closed form; it is estimated by Monte-Carlo returns of the
current deterministic policy, restarted from each probe state through
state injection.
"""

import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from moseac.agent.critics import CriticPair, critic_input
from moseac.agent.policy import PolicyHead
from moseac.agent.reward import RewardParams
from moseac.core.errors import ConfigurationError, ContractViolation
from moseac.envsim.simulator import VariableStepEnv
from moseac.schemas.track import CarState, ElasticAction

logger = logging.getLogger(__name__)

ProbeSnapshot = Tuple[CarState, np.ndarray, ElasticAction]

# Deterministic rollouts never draw from this generator.
_UNUSED_RNG = np.random.default_rng(0)


class LyapunovReading(BaseModel):
    value: float
    alpha_term: float
    qerr_term: float


class LyapunovProbe:
    """Fixed (state, action, duration) probes; only the Q* estimates change after creation."""

    def __init__(self, states: Sequence[CarState], obs: np.ndarray, controls: np.ndarray,
                 durations: np.ndarray, qstar: Optional[np.ndarray] = None):
        self.states = tuple(states)
        self.obs = np.array(obs, dtype=np.float64)
        self.controls = np.array(controls, dtype=np.float64)
        self.durations = np.array(durations, dtype=np.float64)
        self.qstar = qstar
        for array in (self.obs, self.controls, self.durations):
            array.setflags(write=False)

    @classmethod
    def collect(cls, snapshots: Sequence[ProbeSnapshot], size: int, rng: np.random.Generator) -> "LyapunovProbe":
        """Snapshot durations must already be snapped to the physics grid."""
        if len(snapshots) < size:
            raise ContractViolation(f"need {size} snapshots for the probe set, got {len(snapshots)}")
        picked = [snapshots[i] for i in sorted(rng.choice(len(snapshots), size=size, replace=False))]
        return cls(
            states=[state for state, _, _ in picked],
            obs=np.stack([obs for _, obs, _ in picked]),
            controls=np.array([[a.gas, a.brake, a.steer] for _, _, a in picked]),
            durations=np.array([a.duration for _, _, a in picked]),
        )

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def ready(self) -> bool:
        return self.qstar is not None

    def state_dict(self) -> Dict[str, Any]:
        return {
            "states": [state.model_dump(mode="json") for state in self.states],
            "obs": self.obs, "controls": self.controls, "durations": self.durations,
            "qstar": self.qstar,
        }

    @classmethod
    def from_state_dict(cls, state: Dict[str, Any]) -> "LyapunovProbe":
        return cls([CarState.model_validate(s) for s in state["states"]], state["obs"], state["controls"],
                   state["durations"], state["qstar"])


def lyapunov_value(probe: Optional[LyapunovProbe], critics: CriticPair, params: RewardParams,
                   head: PolicyHead) -> LyapunovReading:
    if probe is None or not probe.ready:
        raise ContractViolation("Lyapunov probe has no Q* estimates yet")
    inputs = critic_input(probe.obs, probe.controls, head.normalized_duration(probe.durations))
    error = critics.min_q(inputs) - probe.qstar
    alpha_term = 0.5 * params.alpha_m * params.alpha_m
    qerr_term = float(np.sum(error * error))
    return LyapunovReading(value=alpha_term + qerr_term, alpha_term=alpha_term, qerr_term=qerr_term)


def refresh_qstar(probe: LyapunovProbe, policy: PolicyHead, env: VariableStepEnv, n_rollouts: int,
                  gamma: float, shape: Callable[[float, float], float]) -> LyapunovProbe:
    """
    Q*(s, a, D) <- mean over n_rollouts of the discounted shaped return of
    applying (a, D) at s, then following the deterministic policy until the
    episode ends.
    """
    if not getattr(env, "supports_state_injection", False):
        raise ConfigurationError("Q* estimation needs an environment with state injection")
    if n_rollouts < 1:
        raise ContractViolation("n_rollouts must be at least 1")

    estimates: List[float] = []
    for state, controls, duration in zip(probe.states, probe.controls, probe.durations):
        first = ElasticAction(gas=controls[0], brake=controls[1], steer=controls[2], duration=duration)
        returns = [_rollout_return(state, first, policy, env, gamma, shape) for _ in range(n_rollouts)]
        estimates.append(float(np.mean(returns)))

    probe.qstar = np.asarray(estimates)
    logger.info(f"🎯 Q* refreshed on {probe.size} probes (mean {np.mean(probe.qstar):.4f})")
    return probe


def _rollout_return(state: CarState, first: ElasticAction, policy: PolicyHead, env: VariableStepEnv,
                    gamma: float, shape: Callable[[float, float], float]) -> float:
    env.set_state(state)
    total, discount = 0.0, 1.0
    action = first
    while True:
        result = env.step(action)
        total += discount * shape(result.task_reward, result.elapsed)
        discount *= gamma
        if result.done or discount == 0.0:
            return total
        action = policy.act(result.observation, _UNUSED_RNG, deterministic=True)
