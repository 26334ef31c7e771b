"""
Episode-indexed training loop.

Per episode: roll out until the episode ends, store raw transitions and
accumulate the reward window. At update episodes (e >= k_init and
(e - k_init) % k_update == 0, with enough transitions buffered) run a block
of gradient steps, feed the window average to the alpha_m trend hook and
reset the window. Targets are soft-updated once per episode unless
`soft_update_every_step` asks for one per gradient step.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from moseac.agent import Agent, UpdateStats
from moseac.core.config import OBS_DIM, RESOLVED_CONFIG_NAME, render_config
from moseac.core.errors import TrainingDivergenceError
from moseac.envsim.simulator import ElasticRaceEnv
from moseac.schemas.agent import Transition
from moseac.schemas.config import TrainConfig
from moseac.schemas.track import DurationRange, ElasticAction, StepStatus, TrackSpec
from moseac.services.evaluation_service import evaluate_policy, summarize
from moseac.services.lyapunov_service import (
    LyapunovProbe, LyapunovReading, ProbeSnapshot, lyapunov_value, refresh_qstar,
)
from moseac.services.replay_buffer import ReplayBuffer, RewardWindow
from moseac.storage.checkpoints import load_agent, load_trainer_state, save_agent, save_trainer_state
from moseac.storage.records import MetricsLog, TrainingEvalLog

logger = logging.getLogger(__name__)

STREAMS = ("init", "action", "update", "probe", "env")
TERMINAL = (StepStatus.SUCCESS, StepStatus.OFF_TRACK)
OPTIMIZERS = ("opt_actor", "opt_critic1", "opt_critic2", "opt_temperature")


class EpisodeStats(BaseModel):
    steps: int = 0
    sim_time: float = 0.0
    return_shaped: float = 0.0
    return_task: float = 0.0
    status: StepStatus = StepStatus.RUNNING


class TrainingResult(BaseModel):
    episodes: int
    final_checkpoint: str
    metrics_path: str
    alpha_m: float
    actor_updates: int


class TrainingRun:
    """Everything a run owns; the state saved in a resumable checkpoint."""

    def __init__(self, config: TrainConfig, track: TrackSpec, out_dir: Path):
        self.config = config
        self.track = track
        self.out_dir = Path(out_dir)
        durations = DurationRange(d_min=config.d_min, d_max=config.d_max)
        self.env = ElasticRaceEnv(track, durations=durations, k_length=config.k_length,
                                  start_jitter=config.start_jitter)
        seeds = np.random.SeedSequence(config.seed).spawn(len(STREAMS))
        self.rngs: Dict[str, np.random.Generator] = {
            name: np.random.default_rng(seed) for name, seed in zip(STREAMS, seeds)
        }
        self.agent = Agent.build(config, OBS_DIM, self.rngs["init"])
        self.buffer = ReplayBuffer(config.buffer_capacity, OBS_DIM)
        self.window = RewardWindow()
        self.probe: Optional[LyapunovProbe] = None
        self.probe_pool: List[ProbeSnapshot] = []
        self.episode = 0

    # ===============================================================
    # ONE EPISODE
    # ===============================================================

    def is_update_episode(self, episode: int) -> bool:
        c = self.config
        return episode >= c.k_init and (episode - c.k_init) % c.k_update == 0

    def collect_episode(self, episode: int) -> EpisodeStats:
        c = self.config
        warmup = c.random_warmup and episode < c.k_init
        result = self.env.reset(int(self.rngs["env"].integers(2 ** 31)))
        obs = result.observation
        stats = EpisodeStats()

        while True:
            if warmup:
                action = self.agent.head.random_action(self.rngs["action"])
            else:
                action = self.agent.act(obs, self.rngs["action"])
            if self.probe is None:
                # store the duration the simulator will actually hold
                _, held = self.env.snap_duration(action.duration)
                self.probe_pool.append((self.env.get_state(), obs, action.model_copy(update={"duration": held})))

            result = self.env.step(action)
            shaped = self.agent.shaped_reward(result.task_reward, result.elapsed)
            self.buffer.add(Transition(
                obs=obs, controls=np.array([action.gas, action.brake, action.steer]),
                duration=result.elapsed, task_reward=result.task_reward,
                shaped_reward=shaped if c.literal_reward_storage else math.nan,
                next_obs=result.observation, done=result.status in TERMINAL,
            ))
            self.window.add(shaped)

            stats.steps += 1
            stats.return_shaped += shaped
            stats.return_task += result.task_reward
            obs = result.observation
            if result.done:
                break

        stats.sim_time = self.env.get_state().substeps * self.track.inner_dt
        stats.status = result.status
        return stats

    def update_block(self, episode: int) -> Optional[UpdateStats]:
        c = self.config
        if not self.is_update_episode(episode):
            return None
        if len(self.buffer) < c.batch_size:
            logger.warning(f"⏳ Episode {episode}: {len(self.buffer)} transitions buffered, "
                           f"waiting for {c.batch_size} before updating")
            return None

        stats = None
        for _ in range(c.updates_per_block):
            batch = self.buffer.sample(c.batch_size, self.rngs["update"])
            try:
                stats = self.agent.update(batch, self.rngs["update"])
            except TrainingDivergenceError as exc:
                exc.diagnostics.setdefault("batch_snapshot", self.agent.diagnostics(batch))
                raise
            if c.soft_update_every_step:
                self.agent.soft_update()

        self.agent.adapt(self.window.average())
        self.window.reset()
        logger.debug(f"Episode {episode}: update block done, alpha_m={self.agent.params.alpha_m:.4f}")
        return stats

    def monitor(self, episode: int) -> Optional[LyapunovReading]:
        c = self.config
        if self.probe is None and len(self.probe_pool) >= c.probe_size:
            self.probe = LyapunovProbe.collect(self.probe_pool, c.probe_size, self.rngs["probe"])
            self.probe_pool = []
            self.refresh_probe()
        elif self.probe is not None and (episode + 1) % c.qstar_refresh_every == 0:
            self.refresh_probe()
        if self.probe is None:
            return None
        return lyapunov_value(self.probe, self.agent.critics, self.agent.params, self.agent.head)

    def refresh_probe(self) -> None:
        refresh_qstar(self.probe, self.agent.snapshot(), self.env.clone(), self.config.qstar_rollouts,
                      self.config.gamma, self.agent.shaped_reward)

    def metrics_row(self, episode: int, stats: EpisodeStats, update: Optional[UpdateStats],
                    reading: Optional[LyapunovReading]) -> List[Any]:
        params = self.agent.params
        return [
            episode, stats.steps, stats.sim_time, stats.return_shaped, stats.return_task,
            params.alpha_m, params.alpha_eps, self.agent.temp.temperature,
            update.critic_loss if update else math.nan,
            update.actor_loss if update else math.nan,
            self.agent.grad_norm(),
            reading.value if reading else math.nan,
            0.5 * params.alpha_m * params.alpha_m,
            reading.qerr_term if reading else math.nan,
        ]

    # ===============================================================
    # CHECKPOINTS
    # ===============================================================

    def save(self, directory: Path) -> Path:
        save_agent(self.agent, directory, self.config)
        scalars: Dict[str, Any] = {
            "episode": self.episode,
            "window_total": self.window.total,
            "window_steps": self.window.steps,
            "buffer_cursor": self.buffer.cursor,
            "buffer_size": self.buffer.size,
            "rng_states": {name: rng.bit_generator.state for name, rng in self.rngs.items()},
            "optimizer_steps": {name: getattr(self.agent, name).step for name in OPTIMIZERS},
            "has_actor_grad": self.agent.last_actor_grad is not None,
        }
        arrays: Dict[str, np.ndarray] = {}
        for key, value in self.buffer.state_dict().items():
            if isinstance(value, np.ndarray):
                arrays[f"buffer_{key}"] = value
        for name in OPTIMIZERS:
            state = getattr(self.agent, name).state_dict()
            arrays[f"{name}_m"], arrays[f"{name}_v"] = state["m"], state["v"]
        if self.agent.last_actor_grad is not None:
            arrays["last_actor_grad"] = self.agent.last_actor_grad
        for prefix, snapshots in (("probe", self.probe), ("pool", self._pool_as_probe())):
            if snapshots is None:
                continue
            state = snapshots.state_dict()
            scalars[f"{prefix}_states"] = state["states"]
            for key in ("obs", "controls", "durations"):
                arrays[f"{prefix}_{key}"] = state[key]
            if state["qstar"] is not None:
                arrays[f"{prefix}_qstar"] = state["qstar"]
        save_trainer_state(directory, scalars, arrays)
        return Path(directory)

    def _pool_as_probe(self) -> Optional[LyapunovProbe]:
        if not self.probe_pool:
            return None
        return LyapunovProbe(
            states=[state for state, _, _ in self.probe_pool],
            obs=np.stack([obs for _, obs, _ in self.probe_pool]),
            controls=np.array([[a.gas, a.brake, a.steer] for _, _, a in self.probe_pool]),
            durations=np.array([a.duration for _, _, a in self.probe_pool]),
        )

    def restore(self, directory: Path) -> None:
        """Loads a resumable checkpoint written by `save`; the next episode continues bit-exactly."""
        scalars, arrays = load_trainer_state(directory)
        self.agent = load_agent(directory, self.config)
        self.episode = int(scalars["episode"])
        self.window.total = float(scalars["window_total"])
        self.window.steps = int(scalars["window_steps"])

        buffer_state = {key[len("buffer_"):]: value for key, value in arrays.items() if key.startswith("buffer_")}
        buffer_state.update(cursor=scalars["buffer_cursor"], size=scalars["buffer_size"])
        self.buffer.load_state_dict(buffer_state)

        for name, state in scalars["rng_states"].items():
            self.rngs[name].bit_generator.state = state
        for name in OPTIMIZERS:
            getattr(self.agent, name).load_state_dict({
                "m": arrays[f"{name}_m"], "v": arrays[f"{name}_v"], "step": scalars["optimizer_steps"][name],
            })
        if scalars["has_actor_grad"]:
            self.agent.last_actor_grad = np.array(arrays["last_actor_grad"])

        self.probe = self._load_snapshots("probe", scalars, arrays)
        pool = self._load_snapshots("pool", scalars, arrays)
        self.probe_pool = [] if pool is None else [
            (state, obs, ElasticAction(gas=c[0], brake=c[1], steer=c[2], duration=d))
            for state, obs, c, d in zip(pool.states, np.array(pool.obs), pool.controls, pool.durations)
        ]
        logger.info(f"♻️ Resumed from {directory} at episode {self.episode}")

    @staticmethod
    def _load_snapshots(prefix: str, scalars: Dict[str, Any],
                        arrays: Dict[str, np.ndarray]) -> Optional[LyapunovProbe]:
        if f"{prefix}_states" not in scalars:
            return None
        return LyapunovProbe.from_state_dict({
            "states": scalars[f"{prefix}_states"],
            "obs": arrays[f"{prefix}_obs"],
            "controls": arrays[f"{prefix}_controls"],
            "durations": arrays[f"{prefix}_durations"],
            "qstar": np.array(arrays[f"{prefix}_qstar"]) if f"{prefix}_qstar" in arrays else None,
        })


# ===============================================================
# ENTRY POINT
# ===============================================================

def run_training(config: TrainConfig, track: TrackSpec, out_dir: Path,
                 resume: Optional[Path] = None) -> TrainingResult:
    """
    Runs episodes [start, t_max) and writes metrics.csv, periodic checkpoints
    under checkpoints/, the final checkpoint under final/ and resolved_config.
    A non-finite loss or gradient writes diagnostics.json and re-raises.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / RESOLVED_CONFIG_NAME).write_text(render_config(config.flat()), encoding="utf-8")

    run = TrainingRun(config, track, out_dir)
    if resume is not None:
        run.restore(resume)
    start = run.episode
    metrics = MetricsLog(out_dir / "metrics.csv", keep_before=start if resume is not None else None)
    eval_log = None
    if config.eval_every:
        eval_log = TrainingEvalLog(out_dir / "training_eval.csv", keep_before=start if resume is not None else None)

    logger.info(f"🚀 Training {config.algo.value} (seed {config.seed}) for episodes {start}..{config.t_max - 1}")
    for episode in range(start, config.t_max):
        try:
            stats = run.collect_episode(episode)
            update = run.update_block(episode)
            if not config.soft_update_every_step:
                run.agent.soft_update()
            reading = run.monitor(episode)
        except TrainingDivergenceError as exc:
            dump = out_dir / "diagnostics.json"
            dump.write_text(json.dumps({"episode": episode, "error": str(exc), "diagnostics": exc.diagnostics},
                                       indent=1, default=float), encoding="utf-8")
            logger.error(f"💥 Training diverged at episode {episode}: {exc}. Diagnostics in {dump}")
            raise

        metrics.append(run.metrics_row(episode, stats, update, reading))
        run.episode = episode + 1

        if (episode + 1) % config.log_every == 0:
            logger.info(f"Episode {episode + 1}/{config.t_max}: steps={stats.steps} "
                        f"sim_time={stats.sim_time:.2f}s task={stats.return_task:.2f} "
                        f"status={stats.status.value} alpha_m={run.agent.params.alpha_m:.3f} "
                        f"temperature={run.agent.temp.temperature:.4f}")
        if eval_log is not None and (episode + 1) % config.eval_every == 0:
            records = evaluate_policy(run.agent.snapshot(), track, config.eval_episodes, config.seed,
                                      config.workers, config.k_length, config.start_jitter)
            eval_log.append_row(summarize(records, episode))
        if config.checkpoint_every and (episode + 1) % config.checkpoint_every == 0:
            path = run.save(out_dir / "checkpoints" / f"episode_{episode + 1:06d}")
            logger.info(f"💾 Checkpoint written to {path}")

    final = run.save(out_dir / "final")
    logger.info(f"🏁 Training finished; final checkpoint in {final}")
    return TrainingResult(episodes=run.episode, final_checkpoint=str(final),
                          metrics_path=str(metrics.path), alpha_m=run.agent.params.alpha_m,
                          actor_updates=run.agent.opt_actor.step)
