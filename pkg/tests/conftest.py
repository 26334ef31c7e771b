from typing import Callable, Optional

import numpy as np
import pytest

from moseac.agent import CriticPair, EntropyTemp, PolicyHead
from moseac.core.config import ACTION_CONTROLS, OBS_DIM
from moseac.envsim.track import load_track, make_track
from moseac.gradnet import DenseNet
from moseac.schemas.agent import TransitionBatch
from moseac.schemas.config import TrainConfig
from moseac.schemas.track import DurationRange, TrackSpec


@pytest.fixture(scope="session")
def stadium() -> TrackSpec:
    return load_track()


@pytest.fixture
def straight_track() -> TrackSpec:
    """Ten waypoints 5 m apart along +x."""
    return make_track([(5.0 * i, 0.0) for i in range(11)], corridor_half_width=4.0)


@pytest.fixture
def tiny_config() -> TrainConfig:
    """A run small enough for unit tests: 8-unit networks, 15-step episodes, unscaled task reward."""
    return TrainConfig(
        seed=7, t_max=4, k_length=15, k_init=2, k_update=1, updates_per_block=2,
        batch_size=8, buffer_capacity=500, hidden_width=8, hidden_layers=1,
        probe_size=4, qstar_refresh_every=2, checkpoint_every=2, log_every=1, task_reward_scale=1.0,
    )


@pytest.fixture
def make_head() -> Callable[..., PolicyHead]:
    def build(seed: int = 0, obs_dim: int = OBS_DIM, hidden: int = 8,
              fixed_duration: Optional[float] = None) -> PolicyHead:
        k = ACTION_CONTROLS if fixed_duration is not None else ACTION_CONTROLS + 1
        net = DenseNet.initialize([obs_dim, hidden, 2 * k], np.random.default_rng(seed))
        return PolicyHead(net, DurationRange(), fixed_duration)
    return build


@pytest.fixture
def make_critics() -> Callable[..., CriticPair]:
    def build(seed: int = 1, obs_dim: int = OBS_DIM, hidden: int = 8) -> CriticPair:
        return CriticPair.initialize(obs_dim + ACTION_CONTROLS + 1, [hidden], np.random.default_rng(seed))
    return build


@pytest.fixture
def temp() -> EntropyTemp:
    return EntropyTemp.from_temperature(0.05, -4.0)


@pytest.fixture
def make_batch() -> Callable[..., TransitionBatch]:
    def build(size: int = 6, seed: int = 2, done: bool = False, obs_dim: int = OBS_DIM,
              task_reward: Optional[np.ndarray] = None) -> TransitionBatch:
        rng = np.random.default_rng(seed)
        durations = DurationRange()
        return TransitionBatch(
            obs=rng.uniform(-1.0, 1.0, (size, obs_dim)),
            controls=rng.uniform(-1.0, 1.0, (size, ACTION_CONTROLS)),
            duration=rng.uniform(durations.d_min, durations.d_max, size),
            task_reward=task_reward if task_reward is not None else rng.integers(0, 3, size) / 100.0,
            shaped_reward=np.full(size, np.nan),
            next_obs=rng.uniform(-1.0, 1.0, (size, obs_dim)),
            done=np.full(size, done),
        )
    return build
