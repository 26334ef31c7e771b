import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moseac.core.config import D_MAX, D_MIN, DEFAULT_TRACK_PATH, INNER_DT, OBS_DIM
from moseac.core.errors import ConfigurationError, ContractViolation
from moseac.envsim import ElasticRaceEnv, dump_track, load_track, make_track, parse_track, stadium_track
from moseac.schemas.track import ElasticAction, StepStatus

FULL_GAS = ElasticAction(gas=1.0, brake=0.0, steer=0.0, duration=D_MAX)

actions = st.builds(
    ElasticAction,
    gas=st.floats(-1.0, 1.0), brake=st.floats(-1.0, 1.0), steer=st.floats(-1.0, 1.0),
    duration=st.floats(D_MIN, D_MAX),
)


def drive(env, seed, sequence):
    trace = [env.reset(seed)]
    for action in sequence:
        trace.append(env.step(action))
        if trace[-1].done:
            break
    return trace


@settings(max_examples=30, deadline=None)
@given(sequence=st.lists(actions, min_size=1, max_size=25), seed=st.integers(0, 2 ** 31 - 1))
def test_identical_inputs_give_identical_trajectories(stadium, sequence, seed):
    env = ElasticRaceEnv(stadium, start_jitter=1.0)
    first = drive(env, seed, sequence)
    second = drive(env.clone(), seed, sequence)
    assert len(first) == len(second)
    for a, b in zip(first, second):
        assert np.array_equal(a.observation, b.observation)
        assert (a.task_reward, a.elapsed, a.status) == (b.task_reward, b.elapsed, b.status)


@settings(max_examples=30, deadline=None)
@given(sequence=st.lists(actions, min_size=1, max_size=25))
def test_mirrored_steering_mirrors_the_whole_trajectory(stadium, sequence):
    env, mirror = ElasticRaceEnv(stadium), ElasticRaceEnv(stadium.mirrored())
    env.reset(0)
    mirror.reset(0)
    for action in sequence:
        result = env.step(action)
        flipped = mirror.step(action.model_copy(update={"steer": -action.steer}))
        a, b = env.get_state(), mirror.get_state()
        assert (a.x, a.y, a.heading, a.speed) == pytest.approx((b.x, -b.y, -b.heading, b.speed), abs=1e-9)
        assert (a.last_passed_index, a.substeps) == (b.last_passed_index, b.substeps)
        assert (result.task_reward, result.elapsed, result.status) == \
            (flipped.task_reward, flipped.elapsed, flipped.status)
        if result.done:
            break


def test_long_hold_equals_two_short_holds(stadium):
    env = ElasticRaceEnv(stadium)
    env.reset(0)
    env.step(FULL_GAS)
    split = env.clone()
    split.set_state(env.get_state())
    hold = ElasticAction(gas=0.6, brake=0.0, steer=0.3, duration=2 * D_MIN)
    env.step(hold)
    split.step(hold.model_copy(update={"duration": D_MIN}))
    split.step(hold.model_copy(update={"duration": D_MIN}))
    a, b = env.get_state(), split.get_state()
    assert (a.x, a.y, a.heading, a.speed, a.substeps) == pytest.approx((b.x, b.y, b.heading, b.speed, b.substeps),
                                                                          abs=1e-12)
    assert b.step_count == a.step_count + 1


def test_durations_snap_to_the_physics_grid(stadium):
    env = ElasticRaceEnv(stadium)
    assert env.snap_duration(D_MIN) == (4, 4 * INNER_DT)
    assert env.snap_duration(D_MAX) == (24, 24 * INNER_DT)
    assert env.snap_duration(0.05) == (6, 6 * INNER_DT)
    assert env.snap_duration(5.0)[0] == 24
    assert env.snap_duration(0.001)[0] == 4


def test_observation_shape_and_bounds(stadium):
    env = ElasticRaceEnv(stadium)
    obs = env.reset(0).observation
    assert obs.shape == (OBS_DIM,)
    assert obs[0] == 0.0
    assert np.all(obs[-8:] == 0.0)
    result = env.step(FULL_GAS)
    assert np.all(np.abs(result.observation) <= 1.0)
    assert np.allclose(result.observation[-8:-4], [1.0, 0.0, 0.0, 1.0])


def test_straight_run_collects_waypoints_and_succeeds(straight_track):
    env = ElasticRaceEnv(straight_track, k_length=200)
    env.reset(0)
    total, result = 0.0, None
    while result is None or not result.done:
        result = env.step(FULL_GAS)
        total += result.task_reward
    assert result.status is StepStatus.SUCCESS
    assert total == pytest.approx(0.10)
    assert env.get_state().last_passed_index == straight_track.n_targets


def test_hard_turn_leaves_the_corridor(straight_track):
    env = ElasticRaceEnv(straight_track, k_length=200)
    env.reset(0)
    result = None
    for _ in range(200):
        result = env.step(ElasticAction(gas=1.0, brake=0.0, steer=1.0, duration=D_MAX))
        if result.done:
            break
    assert result.status is StepStatus.OFF_TRACK


def test_episode_times_out_after_k_length(stadium):
    env = ElasticRaceEnv(stadium, k_length=3)
    env.reset(0)
    idle = ElasticAction(gas=0.0, brake=1.0, steer=0.0, duration=D_MIN)
    statuses = [env.step(idle).status for _ in range(3)]
    assert statuses == [StepStatus.RUNNING, StepStatus.RUNNING, StepStatus.TIMEOUT]
    with pytest.raises(ContractViolation):
        env.step(idle)


def test_step_before_reset_is_rejected(stadium):
    with pytest.raises(ContractViolation):
        ElasticRaceEnv(stadium).step(FULL_GAS)


def test_state_injection_resumes_the_episode(stadium):
    env = ElasticRaceEnv(stadium)
    env.reset(3)
    for _ in range(4):
        env.step(FULL_GAS)
    saved = env.get_state()
    expected = env.step(FULL_GAS)
    replay = ElasticRaceEnv(stadium)
    replay.set_state(saved)
    assert np.array_equal(replay.step(FULL_GAS).observation, expected.observation)


def test_start_jitter_is_seeded(stadium):
    env = ElasticRaceEnv(stadium, start_jitter=2.0)
    env.reset(1)
    first = env.get_state()
    env.reset(1)
    assert env.get_state() == first
    env.reset(2)
    assert env.get_state().y != first.y


# ===============================================================
# TRACK FILES
# ===============================================================

def test_bundled_track_is_the_stadium(stadium):
    assert stadium.waypoints[0] == stadium.waypoints[-1]
    assert stadium.n_targets == 20
    assert math.isclose(stadium.start_pose[2], 0.0, abs_tol=1e-12)
    assert load_track(DEFAULT_TRACK_PATH) == stadium


def test_track_text_round_trip():
    track = stadium_track(n_waypoints=12)
    assert parse_track(dump_track(track)) == track


@pytest.mark.parametrize("text, message", [
    ("", "empty"),
    ("track-v2 6.0 0.01\n0 0\n1 0\n", "header"),
    ("track-v1 6.0 0.01\n0 0\n1\n", "line 3"),
    ("track-v1 6.0 0.01\n0 0\n1 x\n", "line 3"),
    ("track-v1 6.0 0.01\n0 0\n0 0\n", "coincide"),
    ("track-v1 -1 0.01\n0 0\n1 0\n", "Invalid track"),
])
def test_malformed_tracks_are_configuration_errors(text, message):
    with pytest.raises(ConfigurationError, match=message):
        parse_track(text)


def test_missing_track_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_track(tmp_path / "nope.track")


def test_mirrored_track_flips_the_start_heading():
    track = make_track([(0.0, 0.0), (1.0, 1.0)], corridor_half_width=1.0)
    assert track.mirrored().start_pose == pytest.approx((0.0, 0.0, -math.pi / 4.0))
