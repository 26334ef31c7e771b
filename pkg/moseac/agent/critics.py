import math
from typing import Optional, Sequence, Tuple

import numpy as np

from moseac.core.errors import ContractViolation
from moseac.gradnet import DenseNet, soft_update


def critic_input(obs: np.ndarray, controls: np.ndarray, normalized_duration: np.ndarray) -> np.ndarray:
    """observation ⊕ controls(3) ⊕ normalized duration(1), batched."""
    return np.concatenate([obs, controls, np.reshape(normalized_duration, (-1, 1))], axis=1)


class CriticPair:
    """Twin Q-networks and their target copies. Targets move only through `soft_update`."""

    def __init__(self, q1: DenseNet, q2: DenseNet, q1_target: Optional[DenseNet] = None,
                 q2_target: Optional[DenseNet] = None):
        if not q1.same_shape(q2):
            raise ContractViolation("twin critics must share one architecture")
        if q1.out_dim != 1:
            raise ContractViolation(f"critics must output one value, got {q1.out_dim}")
        self.q1 = q1
        self.q2 = q2
        self.q1_target = q1_target if q1_target is not None else q1.copy()
        self.q2_target = q2_target if q2_target is not None else q2.copy()

    @classmethod
    def initialize(cls, in_dim: int, hidden: Sequence[int], rng: np.random.Generator,
                   activation: str = "tanh") -> "CriticPair":
        sizes = [in_dim, *hidden, 1]
        q1 = DenseNet.initialize(sizes, rng, hidden_activation=activation)
        q2 = DenseNet.initialize(sizes, rng, hidden_activation=activation)
        return cls(q1, q2)

    @property
    def in_dim(self) -> int:
        return self.q1.in_dim

    def q_values(self, inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.q1.forward(inputs)[:, 0], self.q2.forward(inputs)[:, 0]

    def min_q(self, inputs: np.ndarray) -> np.ndarray:
        return np.minimum(*self.q_values(inputs))

    def target_min(self, inputs: np.ndarray) -> np.ndarray:
        return np.minimum(self.q1_target.forward(inputs)[:, 0], self.q2_target.forward(inputs)[:, 0])

    def soft_update(self, tau_soft: float) -> None:
        soft_update(self.q1_target, self.q1, tau_soft)
        soft_update(self.q2_target, self.q2, tau_soft)

    def copy(self) -> "CriticPair":
        return CriticPair(self.q1.copy(), self.q2.copy(), self.q1_target.copy(), self.q2_target.copy())


class EntropyTemp:
    """Learned entropy coefficient, stored as its logarithm so it stays positive."""

    def __init__(self, log_temperature: float, target_entropy: float):
        self.log_temperature = np.array([float(log_temperature)])
        self.target_entropy = float(target_entropy)

    @classmethod
    def from_temperature(cls, temperature: float, target_entropy: float) -> "EntropyTemp":
        if temperature <= 0.0:
            raise ContractViolation(f"temperature must be positive, got {temperature}")
        return cls(math.log(temperature), target_entropy)

    @property
    def temperature(self) -> float:
        return float(np.exp(self.log_temperature[0]))

    def copy(self) -> "EntropyTemp":
        return EntropyTemp(float(self.log_temperature[0]), self.target_entropy)
