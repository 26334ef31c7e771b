import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from moseac.agent.policy import PolicyHead
from moseac.core.config import K_LENGTH
from moseac.envsim.simulator import ElasticRaceEnv
from moseac.schemas.evaluation import EvalRecord, TrainingEvalRow
from moseac.schemas.track import StepStatus, TrackSpec
from moseac.storage.checkpoints import load_policy, load_run_config

logger = logging.getLogger(__name__)


def run_episode(policy: PolicyHead, track: TrackSpec, episode: int, seed: int, k_length: int = K_LENGTH,
                start_jitter: float = 0.0, stochastic: bool = False) -> EvalRecord:
    """One evaluation episode on its own environment; reset seed and sampling seed are seed + episode."""
    env = ElasticRaceEnv(track, durations=policy.durations, k_length=k_length, start_jitter=start_jitter)
    rng = np.random.default_rng(seed + episode)
    result = env.reset(seed + episode)
    while not result.done:
        result = env.step(policy.act(result.observation, rng, deterministic=not stochastic))

    state = env.get_state()
    seconds = state.substeps * track.inner_dt
    return EvalRecord(episode=episode, success=result.status is StepStatus.SUCCESS,
                      energy_steps=state.step_count, time_seconds=seconds,
                      mean_rate_hz=state.step_count / seconds)


def evaluate_policy(policy: PolicyHead, track: TrackSpec, n_episodes: int, seed: int, workers: int = 1,
                    k_length: int = K_LENGTH, start_jitter: float = 0.0,
                    stochastic: bool = False) -> List[EvalRecord]:
    """
    Independent episodes, one environment per episode. The policy is only
    read, so worker threads share it; records come back in episode order.
    """
    def job(episode: int) -> EvalRecord:
        return run_episode(policy, track, episode, seed, k_length, start_jitter, stochastic)

    if workers <= 1:
        return [job(i) for i in range(n_episodes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(n_episodes)))


def evaluate(checkpoint: Path, track: TrackSpec, n_episodes: int, seed: int, workers: int = 1,
             stochastic: bool = False, k_length: Optional[int] = None) -> List[EvalRecord]:
    """Evaluates a checkpoint directory; episode length and start jitter come from its config."""
    policy = load_policy(checkpoint)
    config = load_run_config(checkpoint)
    records = evaluate_policy(policy, track, n_episodes, seed, workers,
                              k_length or config.k_length, config.start_jitter, stochastic)
    successes = sum(r.success for r in records)
    logger.info(f"✅ Evaluated {checkpoint}: {successes}/{n_episodes} successful episodes")
    return records


def summarize(records: List[EvalRecord], episode: int) -> TrainingEvalRow:
    return TrainingEvalRow(
        episode=episode,
        success_rate=float(np.mean([r.success for r in records])),
        mean_energy=float(np.mean([r.energy_steps for r in records])),
        mean_time=float(np.mean([r.time_seconds for r in records])),
    )
