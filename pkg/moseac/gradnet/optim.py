from typing import Any, Dict, Literal

import numpy as np

from moseac.core.config import LR_DECAY_STEPS
from moseac.core.errors import ContractViolation, TrainingDivergenceError
from moseac.gradnet.dense import DenseNet

Schedule = Literal["constant", "diminishing"]


def learning_rate(base_rate: float, step: int, schedule: Schedule = "constant",
                  decay_steps: int = LR_DECAY_STEPS) -> float:
    """
    Rate used for update number `step` (0-based).
    The diminishing form base/(1 + k/decay) has a divergent sum and a
    convergent sum of squares.
    """
    if schedule == "constant":
        return base_rate
    if schedule == "diminishing":
        return base_rate / (1.0 + step / decay_steps)
    raise ContractViolation(f"unknown learning-rate schedule '{schedule}'")


class OptimState:
    """Adaptive-moment state for one flat parameter vector."""

    def __init__(self, n_params: int, base_rate: float, schedule: Schedule = "constant",
                 decay_steps: int = LR_DECAY_STEPS, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.step = 0
        self.base_rate = base_rate
        self.schedule: Schedule = schedule
        self.decay_steps = decay_steps
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    def rate(self) -> float:
        return learning_rate(self.base_rate, self.step, self.schedule, self.decay_steps)

    def state_dict(self) -> Dict[str, Any]:
        return {"m": self.m.copy(), "v": self.v.copy(), "step": self.step}

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        if state["m"].shape != self.m.shape:
            raise ContractViolation("optimizer state does not match parameter count")
        self.m = np.array(state["m"], dtype=np.float64)
        self.v = np.array(state["v"], dtype=np.float64)
        self.step = int(state["step"])


def opt_step(state: OptimState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One descent step; returns the new parameter vector and advances `state.step`."""
    if grads.shape != params.shape or grads.shape != state.m.shape:
        raise ContractViolation(f"gradient shape {grads.shape} does not match parameters {params.shape}")
    if not np.all(np.isfinite(grads)):
        raise TrainingDivergenceError(
            "non-finite gradient in optimizer step",
            {"step": state.step, "non_finite": int(np.count_nonzero(~np.isfinite(grads)))},
        )

    rate = state.rate()
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (grads * grads)
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return params - rate * m_hat / (np.sqrt(v_hat) + state.epsilon)


def soft_update(target: DenseNet, online: DenseNet, tau_soft: float) -> DenseNet:
    """target <- (1 - tau) * target + tau * online, in place."""
    if not target.same_shape(online):
        raise ContractViolation("soft_update needs networks of identical shape")
    if not 0.0 < tau_soft <= 1.0:
        raise ContractViolation(f"tau_soft must lie in (0, 1], got {tau_soft}")
    if tau_soft == 1.0:
        target.weights = online.weights.copy()
    else:
        target.weights = (1.0 - tau_soft) * target.weights + tau_soft * online.weights
    return target
