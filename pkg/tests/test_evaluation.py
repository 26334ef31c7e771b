import numpy as np
import pytest

from moseac.agent import Agent
from moseac.core.config import OBS_DIM
from moseac.schemas.config import Algo
from moseac.schemas.evaluation import EvalRecord
from moseac.services.evaluation_service import evaluate, evaluate_policy, summarize
from moseac.services.selfcheck_service import reward_suite, run_selfcheck
from moseac.storage.checkpoints import save_agent


@pytest.fixture
def checkpoint(tmp_path, tiny_config):
    def build(algo=Algo.MOSEAC):
        config = tiny_config.model_copy(update={"algo": algo, "k_length": 40})
        agent = Agent.build(config, OBS_DIM, np.random.default_rng(11))
        return save_agent(agent, tmp_path / algo.value, config)
    return build


def test_fixed_rate_policy_runs_at_twenty_hertz(checkpoint, stadium):
    records = evaluate(checkpoint(Algo.SAC_FIXED), stadium, 3, seed=0)
    assert [r.episode for r in records] == [0, 1, 2]
    for record in records:
        assert record.mean_rate_hz == pytest.approx(20.0)
        assert record.time_seconds == pytest.approx(record.energy_steps / 20.0)


def test_elastic_policy_stays_inside_the_rate_range(checkpoint, stadium):
    for record in evaluate(checkpoint(), stadium, 3, seed=0, stochastic=True):
        assert 5.0 - 1e-9 <= record.mean_rate_hz <= 30.0 + 1e-9
        assert 1 <= record.energy_steps <= 40


def test_same_seed_gives_identical_records(checkpoint, stadium):
    path = checkpoint()
    assert evaluate(path, stadium, 4, seed=5, stochastic=True) == evaluate(path, stadium, 4, seed=5, stochastic=True)


def test_worker_threads_do_not_change_the_records(make_head, stadium):
    head = make_head(seed=3)
    serial = evaluate_policy(head, stadium, 6, seed=2, workers=1, k_length=30, stochastic=True)
    threaded = evaluate_policy(head, stadium, 6, seed=2, workers=3, k_length=30, stochastic=True)
    assert serial == threaded


def test_summarize():
    records = [
        EvalRecord(episode=0, success=True, energy_steps=100, time_seconds=5.0, mean_rate_hz=20.0),
        EvalRecord(episode=1, success=False, energy_steps=20, time_seconds=2.0, mean_rate_hz=10.0),
    ]
    row = summarize(records, episode=49)
    assert (row.episode, row.success_rate, row.mean_energy, row.mean_time) == (49, 0.5, 60.0, 3.5)


# ===============================================================
# SELF-CHECK
# ===============================================================

def test_reward_suite_passes():
    assert reward_suite()


def test_selfcheck_passes_and_flags_a_corrupt_checkpoint(straight_track):
    results = run_selfcheck(seed=1, track=straight_track)
    assert [r.name for r in results] == ["gradients", "environment", "rewards", "checkpoint"]
    assert all(r.passed for r in results), [r.detail for r in results if not r.passed]

    corrupted = {r.name: r for r in run_selfcheck(seed=1, track=straight_track, corrupt_magic=True)}
    assert not corrupted["checkpoint"].passed
    assert "ELASTIC-CKPT-1" in corrupted["checkpoint"].detail
    assert corrupted["rewards"].passed
