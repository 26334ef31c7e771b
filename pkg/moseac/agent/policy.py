"""
Squashed-Gaussian policy over (gas, brake, steer, duration).

The actor network emits a mean and a log-std per coordinate. Samples pass
through tanh; the duration coordinate is then mapped affinely onto
[d_min, d_max]. Log-probabilities carry the change-of-variables term of
every squashed coordinate.
"""

import math
from typing import Optional, Tuple

import numpy as np

from moseac.core.config import ACTION_CONTROLS, LOG_STD_MAX, LOG_STD_MIN
from moseac.core.errors import ContractViolation
from moseac.gradnet import DenseNet, GradTape, Node
from moseac.schemas.track import DurationRange, ElasticAction

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)


def log_one_minus_tanh_sq(u: np.ndarray) -> np.ndarray:
    """log(1 - tanh(u)^2) without cancellation for large |u|."""
    return 2.0 * (_LOG_2 - u - np.logaddexp(0.0, -2.0 * u))


class PolicyHead:
    def __init__(self, net: DenseNet, durations: Optional[DurationRange] = None,
                 fixed_duration: Optional[float] = None):
        self.net = net
        self.durations = durations or DurationRange()
        self.fixed_duration = fixed_duration
        if net.out_dim != 2 * self.action_dim:
            raise ContractViolation(
                f"actor must emit {2 * self.action_dim} values (mean and log-std), got {net.out_dim}"
            )

    @property
    def action_dim(self) -> int:
        return ACTION_CONTROLS if self.fixed_duration is not None else ACTION_CONTROLS + 1

    @property
    def elastic(self) -> bool:
        return self.fixed_duration is None

    @property
    def duration_log_scale(self) -> float:
        """log of d(duration)/d(tanh), the affine part of the duration squash."""
        return math.log((self.durations.d_max - self.durations.d_min) / 2.0)

    def copy(self) -> "PolicyHead":
        return PolicyHead(self.net.copy(), self.durations, self.fixed_duration)

    # ===============================================================
    # NUMPY PATH (acting, targets)
    # ===============================================================

    def gaussian(self, obs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        out = self.net.forward(obs)
        k = self.action_dim
        return out[..., :k], np.clip(out[..., k:], LOG_STD_MIN, LOG_STD_MAX)

    def squash(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Pre-activations -> (controls in (-1, 1), duration in seconds)."""
        squashed = np.tanh(u)
        controls = squashed[..., :ACTION_CONTROLS]
        if not self.elastic:
            return controls, np.full(u.shape[:-1], self.fixed_duration)
        d_min, d_max = self.durations.d_min, self.durations.d_max
        duration = d_min + (d_max - d_min) * (squashed[..., ACTION_CONTROLS] + 1.0) / 2.0
        # tanh saturates to exactly +-1, where the affine map may round one ulp past d_max
        return controls, np.clip(duration, d_min, d_max)

    def log_prob(self, u: np.ndarray, noise: np.ndarray, log_std: np.ndarray) -> np.ndarray:
        gaussian = np.sum(-0.5 * noise * noise - log_std - _HALF_LOG_2PI, axis=-1)
        correction = np.sum(log_one_minus_tanh_sq(u), axis=-1)
        if self.elastic:
            correction = correction + self.duration_log_scale
        return gaussian - correction

    def sample(self, obs: np.ndarray, rng: np.random.Generator,
               deterministic: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Batched sampling; returns (controls, duration, log_prob)."""
        mean, log_std = self.gaussian(obs)
        noise = np.zeros_like(mean) if deterministic else rng.standard_normal(mean.shape)
        u = mean + np.exp(log_std) * noise
        controls, duration = self.squash(u)
        return controls, duration, self.log_prob(u, noise, log_std)

    def sample_action(self, obs: np.ndarray, rng: np.random.Generator,
                      deterministic: bool = False) -> Tuple[np.ndarray, float, float]:
        if obs.ndim != 1:
            raise ContractViolation(f"sample_action expects one observation, got shape {obs.shape}")
        controls, duration, log_prob = self.sample(obs, rng, deterministic)
        return controls, float(duration), float(log_prob)

    def act(self, obs: np.ndarray, rng: np.random.Generator, deterministic: bool = False) -> ElasticAction:
        controls, duration, _ = self.sample_action(obs, rng, deterministic)
        gas, brake, steer = (float(c) for c in controls)
        return ElasticAction(gas=gas, brake=brake, steer=steer, duration=duration)

    def random_action(self, rng: np.random.Generator) -> ElasticAction:
        """Uniform exploration action used during warm-up."""
        gas, brake, steer = rng.uniform(-1.0, 1.0, size=ACTION_CONTROLS)
        if self.elastic:
            duration = float(rng.uniform(self.durations.d_min, self.durations.d_max))
        else:
            duration = self.fixed_duration
        return ElasticAction(gas=float(gas), brake=float(brake), steer=float(steer), duration=duration)

    def normalized_duration(self, duration: np.ndarray) -> np.ndarray:
        return (np.asarray(duration, dtype=np.float64) - self.durations.d_min) / (
            self.durations.d_max - self.durations.d_min
        )

    # ===============================================================
    # TAPE PATH (reparameterized samples for the actor objective)
    # ===============================================================

    def rsample(self, tape: GradTape, obs: Node, noise: np.ndarray,
                params: Optional[Node] = None) -> Tuple[Node, Node, Node]:
        """
        Reparameterized batch sample u = mean + std * noise.
        Returns (controls (B, 3), normalized duration (B, 1), log_prob (B, 1)).
        """
        k = self.action_dim
        if noise.shape != (obs.shape[0], k):
            raise ContractViolation(f"noise must have shape {(obs.shape[0], k)}, got {noise.shape}")
        out = self.net.forward_tape(tape, obs, params)
        mean = tape.columns(out, 0, k)
        log_std = tape.clip(tape.columns(out, k, 2 * k), LOG_STD_MIN, LOG_STD_MAX)
        u = mean + tape.exp(log_std) * noise
        squashed = tape.tanh(u)

        controls = tape.columns(squashed, 0, ACTION_CONTROLS)
        if self.elastic:
            duration = (tape.columns(squashed, ACTION_CONTROLS, k) + 1.0) * 0.5
        else:
            duration = tape.const(np.full((obs.shape[0], 1), self.normalized_duration(self.fixed_duration)))

        gaussian_const = np.sum(-0.5 * noise * noise - _HALF_LOG_2PI, axis=1, keepdims=True)
        log_det = (_LOG_2 - u - tape.softplus(u * -2.0)) * 2.0
        log_prob = gaussian_const - tape.sum(log_std, axis=1) - tape.sum(log_det, axis=1)
        if self.elastic:
            log_prob = log_prob - self.duration_log_scale
        return controls, duration, log_prob
