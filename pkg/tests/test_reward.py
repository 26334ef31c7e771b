import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from moseac.agent.reward import (
    RewardModel, RewardParams, adapt_alpha, alpha_eps_of, duration_factor, seac_shape_reward, shape_reward,
)
from moseac.core.config import D_MAX, D_MIN, V_MAX
from moseac.envsim import ElasticRaceEnv
from moseac.schemas.config import Algo, resolve_run_config
from moseac.schemas.track import ElasticAction, StepStatus

durations = st.floats(min_value=D_MIN, max_value=D_MAX)
alphas = st.floats(min_value=0.0, max_value=5.0)


def test_alpha_eps_reference_values():
    assert alpha_eps_of(1.0) == 0.1
    assert alpha_eps_of(0.0) == pytest.approx(0.14621, abs=1e-5)
    assert alpha_eps_of(10.0) == pytest.approx(2.467e-5, rel=1e-3)


@given(a=alphas, b=alphas)
def test_alpha_eps_is_bounded_and_decreasing(a, b):
    assert 0.0 < alpha_eps_of(a) < 0.2
    if a < b - 1e-9:
        assert alpha_eps_of(a) > alpha_eps_of(b)


def test_alpha_eps_follows_alpha_m():
    params = RewardParams(alpha_m=2.5)
    assert params.alpha_eps == alpha_eps_of(2.5)
    assert params.model_copy(update={"alpha_m": 3.0}).alpha_eps == alpha_eps_of(3.0)


def test_shape_reward_reference_values():
    params = RewardParams()
    assert shape_reward(0.0, 0.1, params) == pytest.approx(-0.1, abs=1e-15)
    assert shape_reward(1.0, D_MIN, params) == pytest.approx(0.9, abs=1e-15)
    assert shape_reward(1.0, D_MAX, params) == pytest.approx(0.0667, abs=1e-4)
    assert duration_factor(D_MIN) == 1.0


@given(r=st.floats(min_value=0.0, max_value=0.2), d=durations, alpha_m=alphas)
def test_shaped_reward_stays_bounded(r, d, alpha_m):
    value = shape_reward(r, d, RewardParams(alpha_m=alpha_m))
    assert math.isfinite(value)
    assert -0.2 <= value <= 5.0 * 0.2


@given(r1=st.floats(0.0, 1.0), r2=st.floats(0.0, 1.0), d=durations, alpha_m=st.floats(0.01, 5.0))
def test_shaping_preserves_task_reward_order(r1, r2, d, alpha_m):
    params = RewardParams(alpha_m=alpha_m)
    if r1 < r2:
        assert shape_reward(r1, d, params) <= shape_reward(r2, d, params)


def test_seac_shape_reward_reference_values():
    assert seac_shape_reward(0.0, 0.1, eps_pen=0.1, tau_pen=1.0) == pytest.approx(-0.2)
    assert seac_shape_reward(0.37, 0.1, eps_pen=0.0, tau_pen=0.0) == 0.37
    assert seac_shape_reward(1.0, 1.0 / 30.0) == pytest.approx(0.8833, abs=1e-4)


def test_adapt_alpha_on_declining_trend():
    params = adapt_alpha(RewardParams(alpha_m=1.0, psi=0.05, prev_avg_reward=5.0), 4.0)
    assert params.alpha_m == pytest.approx(1.05)
    assert params.prev_avg_reward == 4.0
    assert params.alpha_eps == alpha_eps_of(params.alpha_m)


def test_adapt_alpha_respects_the_cap():
    params = adapt_alpha(RewardParams(alpha_m=5.0, alpha_max=5.0, prev_avg_reward=5.0), 4.0)
    assert params.alpha_m == 5.0
    near_cap = adapt_alpha(RewardParams(alpha_m=4.99, alpha_max=5.0, psi=0.05, prev_avg_reward=5.0), 4.0)
    assert near_cap.alpha_m == 5.0


def test_adapt_alpha_ignores_improvement_and_first_window():
    improving = adapt_alpha(RewardParams(alpha_m=1.0, prev_avg_reward=4.0), 4.5)
    assert improving.alpha_m == 1.0
    assert improving.prev_avg_reward == 4.5
    first = adapt_alpha(RewardParams(alpha_m=1.0), -3.0)
    assert first.alpha_m == 1.0
    assert first.prev_avg_reward == -3.0
    within_tolerance = adapt_alpha(RewardParams(alpha_m=1.0, prev_avg_reward=4.0), 4.0 - 1e-7)
    assert within_tolerance.alpha_m == 1.0


@given(trend=st.lists(st.floats(-10.0, 10.0), min_size=1, max_size=60))
def test_alpha_m_is_monotone_and_capped(trend):
    params = RewardParams(alpha_m=1.0, alpha_max=1.5, psi=0.1)
    history = [params.alpha_m]
    for value in trend:
        params = adapt_alpha(params, value)
        history.append(params.alpha_m)
    assert all(b >= a for a, b in zip(history, history[1:]))
    assert max(history) <= 1.5


def test_reward_params_reject_alpha_above_cap():
    with pytest.raises(ValidationError):
        RewardParams(alpha_m=6.0, alpha_max=5.0)
    with pytest.raises(ValidationError):
        RewardParams(alpha_m=-0.1)


def test_reward_model_per_algorithm():
    params = RewardParams()
    task, duration = np.array([0.0, 0.01, 0.02]), np.array([D_MIN, 0.1, D_MAX])
    assert np.allclose(RewardModel(Algo.MOSEAC).shape(task, duration, params), shape_reward(task, duration, params))
    assert np.allclose(RewardModel(Algo.SEAC).shape(task, duration, params), seac_shape_reward(task, duration))
    assert np.array_equal(RewardModel(Algo.SAC_FIXED).shape(task, duration, params), task)
    scaled = RewardModel(Algo.MOSEAC, task_reward_scale=100.0).shape(0.01, D_MIN, params)
    assert scaled == pytest.approx(0.9)
    assert RewardModel(Algo.MOSEAC).adaptive and not RewardModel(Algo.SEAC).adaptive


# ===============================================================
# SHIPPED REWARD SCALE
# ===============================================================

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def discounted(rewards, gamma):
    return sum(gamma ** k * r for k, r in enumerate(rewards))


def crash_return(track, model, params, gamma):
    """Full gas, full left lock, longest period: off the corridor within a few steps."""
    env = ElasticRaceEnv(track)
    env.reset(0)
    rewards = []
    while True:
        result = env.step(ElasticAction(gas=1.0, brake=-1.0, steer=1.0, duration=D_MAX))
        rewards.append(float(model.shape(result.task_reward, result.elapsed, params)))
        if result.done:
            break
    assert result.status is StepStatus.OFF_TRACK
    return discounted(rewards, gamma)


def lap_return(track, model, params, gamma, steps):
    """A lap finished in `steps` periods of D_MAX, all of its task reward paid on the last one."""
    lap_reward = (len(track.waypoints) - 1) / 100.0
    rewards = [float(model.shape(0.0, D_MAX, params))] * (steps - 1)
    rewards.append(float(model.shape(lap_reward, D_MAX, params)))
    return discounted(rewards, gamma)


def fastest_lap_steps(track):
    return math.ceil(ElasticRaceEnv(track).geometry.arc[-1] / (V_MAX * D_MAX))


@pytest.mark.parametrize("name", ["base.cfg", "seac.cfg", "sac_fixed.cfg"])
def test_shipped_configs_pay_more_for_a_lap_than_a_crash(stadium, name):
    config = resolve_run_config(CONFIG_DIR / name, {})
    model = RewardModel(config.algo, config.d_min, config.task_reward_scale, config.eps_pen, config.tau_pen)
    params = RewardParams(alpha_m=config.alpha_m_init, alpha_max=config.alpha_max, psi=config.psi)
    crash = crash_return(stadium, model, params, config.gamma)
    fastest = fastest_lap_steps(stadium)
    # a lap at top speed and one at half of it
    for steps in (fastest, 2 * fastest):
        assert lap_return(stadium, model, params, config.gamma, steps) > crash


def test_unscaled_task_reward_makes_crashing_pay(stadium):
    model, params = RewardModel(Algo.MOSEAC), RewardParams()
    fastest = fastest_lap_steps(stadium)
    assert lap_return(stadium, model, params, 0.99, fastest) < crash_return(stadium, model, params, 0.99)
