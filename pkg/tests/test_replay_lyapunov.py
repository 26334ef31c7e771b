import numpy as np
import pytest

from moseac.agent import RewardModel, RewardParams
from moseac.agent.critics import critic_input
from moseac.core.config import D_MIN, OBS_DIM
from moseac.core.errors import ConfigurationError, ContractViolation
from moseac.envsim import ElasticRaceEnv
from moseac.schemas.agent import Transition
from moseac.schemas.config import Algo
from moseac.schemas.track import ElasticAction
from moseac.services.lyapunov_service import LyapunovProbe, lyapunov_value, refresh_qstar
from moseac.services.replay_buffer import ReplayBuffer, RewardWindow


def transition(i: int, obs_dim: int = 3) -> Transition:
    return Transition(obs=np.full(obs_dim, float(i)), controls=np.array([0.1, 0.2, 0.3]), duration=0.1,
                      task_reward=i / 100.0, next_obs=np.full(obs_dim, i + 1.0), done=i % 4 == 3)


# ===============================================================
# REPLAY
# ===============================================================

def test_sampled_transitions_were_inserted():
    buffer = ReplayBuffer(capacity=10, obs_dim=3)
    for i in range(7):
        buffer.add(transition(i))
    batch = buffer.sample(5, np.random.default_rng(0))
    assert len(set(batch.obs[:, 0])) == 5
    assert np.all(batch.next_obs[:, 0] == batch.obs[:, 0] + 1.0)
    assert np.array_equal(batch.done, batch.obs[:, 0] % 4 == 3)
    assert np.all(np.isnan(batch.shaped_reward))


def test_ring_overwrites_the_oldest_entries():
    buffer = ReplayBuffer(capacity=4, obs_dim=3)
    for i in range(6):
        buffer.add(transition(i))
    assert len(buffer) == 4
    assert sorted(buffer.obs[:, 0]) == [2.0, 3.0, 4.0, 5.0]


def test_underflow_is_a_contract_violation():
    buffer = ReplayBuffer(capacity=4, obs_dim=3)
    buffer.add(transition(0))
    with pytest.raises(ContractViolation):
        buffer.sample(2, np.random.default_rng(0))


def test_buffer_state_round_trip():
    buffer = ReplayBuffer(capacity=4, obs_dim=3)
    for i in range(6):
        buffer.add(transition(i))
    restored = ReplayBuffer(capacity=4, obs_dim=3)
    restored.load_state_dict(buffer.state_dict())
    assert restored.cursor == buffer.cursor and len(restored) == 4
    a = buffer.sample(3, np.random.default_rng(9))
    b = restored.sample(3, np.random.default_rng(9))
    assert np.array_equal(a.obs, b.obs) and np.array_equal(a.done, b.done)


def test_reward_window():
    window = RewardWindow()
    with pytest.raises(ContractViolation):
        window.average()
    for value in (1.0, 2.0, 6.0):
        window.add(value)
    assert window.average() == 3.0
    window.reset()
    assert window.steps == 0 and window.total == 0.0


# ===============================================================
# LYAPUNOV MONITOR
# ===============================================================

@pytest.fixture
def probe(stadium, make_head):
    env = ElasticRaceEnv(stadium)
    head = make_head()
    rng = np.random.default_rng(0)
    snapshots = []
    result = env.reset(0)
    for _ in range(12):
        action = head.act(result.observation, rng)
        _, held = env.snap_duration(action.duration)
        snapshots.append((env.get_state(), result.observation, action.model_copy(update={"duration": held})))
        result = env.step(action)
        if result.done:
            result = env.reset(0)
    return LyapunovProbe.collect(snapshots, 6, np.random.default_rng(1))


def probe_q(probe, critics, head):
    return critics.min_q(critic_input(probe.obs, probe.controls, head.normalized_duration(probe.durations)))


def test_value_at_saturation_with_exact_critics(probe, make_critics, make_head):
    critics, head = make_critics(), make_head()
    probe.qstar = probe_q(probe, critics, head)
    reading = lyapunov_value(probe, critics, RewardParams(alpha_m=5.0, alpha_max=5.0), head)
    assert reading.value == 12.5
    assert reading.qerr_term == 0.0
    assert lyapunov_value(probe, critics, RewardParams(alpha_m=0.0), head).value == 0.0


def test_value_is_the_independent_sum(probe, make_critics, make_head):
    critics, head = make_critics(), make_head()
    probe.qstar = np.random.default_rng(3).normal(0.0, 1.0, probe.size)
    error = probe_q(probe, critics, head) - probe.qstar
    reading = lyapunov_value(probe, critics, RewardParams(alpha_m=1.4), head)
    expected = sum(e * e for e in error) + 0.5 * 1.4 * 1.4
    assert reading.value == pytest.approx(expected, abs=1e-12)
    assert reading.alpha_term == pytest.approx(0.98)


def test_probe_needs_estimates_and_enough_snapshots(probe, make_critics, make_head):
    with pytest.raises(ContractViolation):
        lyapunov_value(probe, make_critics(), RewardParams(), make_head())
    with pytest.raises(ContractViolation):
        lyapunov_value(None, make_critics(), RewardParams(), make_head())
    with pytest.raises(ContractViolation):
        LyapunovProbe.collect([], 1, np.random.default_rng(0))
    assert not probe.obs.flags.writeable


def test_undiscounted_horizon_is_the_immediate_reward(probe, stadium, make_head):
    model, params = RewardModel(Algo.MOSEAC), RewardParams()

    def shape(task_reward, duration):
        return float(model.shape(task_reward, duration, params))

    refresh_qstar(probe, make_head(), ElasticRaceEnv(stadium), 3, 0.0, shape)
    env = ElasticRaceEnv(stadium)
    for state, controls, duration, estimate in zip(probe.states, probe.controls, probe.durations, probe.qstar):
        env.set_state(state)
        result = env.step(ElasticAction(gas=controls[0], brake=controls[1], steer=controls[2], duration=duration))
        assert estimate == shape(result.task_reward, result.elapsed)


def test_refreshes_are_deterministic(probe, stadium, make_head):
    shape = lambda r, d: float(RewardModel(Algo.MOSEAC).shape(r, d, RewardParams()))  # noqa: E731
    first = refresh_qstar(probe, make_head(), ElasticRaceEnv(stadium, k_length=40), 4, 0.99, shape).qstar.copy()
    second = refresh_qstar(probe, make_head(), ElasticRaceEnv(stadium, k_length=40), 4, 0.99, shape).qstar
    assert np.array_equal(first, second)
    assert np.all(np.isfinite(first))


def test_state_injection_is_required(probe, make_head):
    class SealedEnv:
        supports_state_injection = False

    with pytest.raises(ConfigurationError):
        refresh_qstar(probe, make_head(), SealedEnv(), 1, 0.99, lambda r, d: r)


def test_probe_durations_stay_physical(probe):
    assert probe.size == 6
    assert np.all(probe.durations >= D_MIN)
    assert probe.obs.shape == (6, OBS_DIM)
