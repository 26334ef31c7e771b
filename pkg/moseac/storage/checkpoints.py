"""
Agent checkpoint bundle: a directory holding

    agent.header            key = value (algo, RewardParams, temperature, config hash, durations)
    actor.ckpt, critic1.ckpt, critic2.ckpt, critic1_target.ckpt, critic2_target.ckpt
    resolved_config         the run configuration, loadable with --config
    trainer_state.json/.npz only in resumable training checkpoints
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from dotenv import dotenv_values

from moseac.agent import Agent, CriticPair, EntropyTemp, PolicyHead, RewardParams
from moseac.core.config import CHECKPOINT_MAGIC, RESOLVED_CONFIG_NAME, config_hash, render_config
from moseac.core.errors import CheckpointFormatError, ConfigurationError
from moseac.gradnet import load_net, save_net
from moseac.schemas.config import Algo, RunConfig, TrainConfig, resolve_run_config
from moseac.schemas.track import DurationRange

logger = logging.getLogger(__name__)

HEADER_NAME = "agent.header"
TRAINER_JSON = "trainer_state.json"
TRAINER_ARRAYS = "trainer_state.npz"
NET_FILES = {
    "actor": "actor.ckpt",
    "critic1": "critic1.ckpt",
    "critic2": "critic2.ckpt",
    "critic1_target": "critic1_target.ckpt",
    "critic2_target": "critic2_target.ckpt",
}
HEADER_KEYS = (
    "format", "algo", "alpha_m", "alpha_max", "psi", "alpha_eps", "prev_avg_reward", "log_temperature",
    "target_entropy", "config_hash", "d_min", "d_max", "fixed_duration",
)


def _optional(value: Optional[float]) -> str:
    return "none" if value is None else repr(float(value))


def save_agent(agent: Agent, directory: Path, config: TrainConfig) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    flat = config.flat()
    header = {
        "format": CHECKPOINT_MAGIC,
        "algo": agent.reward_model.algo.value,
        "alpha_m": agent.params.alpha_m,
        "alpha_max": agent.params.alpha_max,
        "psi": agent.params.psi,
        "alpha_eps": agent.params.alpha_eps,
        "prev_avg_reward": _optional(agent.params.prev_avg_reward),
        "log_temperature": float(agent.temp.log_temperature[0]),
        "target_entropy": agent.temp.target_entropy,
        "config_hash": config_hash(flat),
        "d_min": agent.head.durations.d_min,
        "d_max": agent.head.durations.d_max,
        "fixed_duration": _optional(agent.head.fixed_duration),
    }
    (directory / HEADER_NAME).write_text(render_config(header), encoding="utf-8")
    save_net(agent.head.net, directory / NET_FILES["actor"])
    save_net(agent.critics.q1, directory / NET_FILES["critic1"])
    save_net(agent.critics.q2, directory / NET_FILES["critic2"])
    save_net(agent.critics.q1_target, directory / NET_FILES["critic1_target"])
    save_net(agent.critics.q2_target, directory / NET_FILES["critic2_target"])
    (directory / RESOLVED_CONFIG_NAME).write_text(render_config(flat), encoding="utf-8")
    logger.debug(f"💾 Agent checkpoint written to {directory}")
    return directory


def read_header(directory: Path) -> Dict[str, str]:
    path = Path(directory) / HEADER_NAME
    if not path.is_file():
        raise CheckpointFormatError(f"{directory}: missing {HEADER_NAME} (expected magic '{CHECKPOINT_MAGIC}')")
    header = dotenv_values(path, interpolate=False)
    if header.get("format") != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(
            f"{path}: format '{header.get('format')}' is not the expected magic '{CHECKPOINT_MAGIC}'"
        )
    missing = [key for key in HEADER_KEYS if not header.get(key)]
    if missing:
        raise CheckpointFormatError(f"{path}: header lacks {', '.join(missing)} (magic '{CHECKPOINT_MAGIC}')")
    return {key: str(value) for key, value in header.items()}


def _header_float(header: Dict[str, str], key: str) -> Optional[float]:
    value = header[key]
    if value == "none":
        return None
    try:
        return float(value)
    except ValueError:
        raise CheckpointFormatError(f"header value {key} = '{value}' is not numeric (magic '{CHECKPOINT_MAGIC}')")


def load_policy(directory: Path) -> PolicyHead:
    """Actor plus squash ranges; all that evaluation needs."""
    header = read_header(directory)
    durations = DurationRange(d_min=_header_float(header, "d_min"), d_max=_header_float(header, "d_max"))
    return PolicyHead(load_net(Path(directory) / NET_FILES["actor"]), durations,
                      _header_float(header, "fixed_duration"))


def load_run_config(directory: Path) -> RunConfig:
    path = Path(directory) / RESOLVED_CONFIG_NAME
    if not path.is_file():
        raise CheckpointFormatError(f"{directory}: missing {RESOLVED_CONFIG_NAME} (magic '{CHECKPOINT_MAGIC}')")
    try:
        return resolve_run_config(path, {})
    except ConfigurationError as exc:
        raise CheckpointFormatError(f"{path}: {exc} (magic '{CHECKPOINT_MAGIC}')") from exc


def load_agent(directory: Path, config: Optional[TrainConfig] = None) -> Agent:
    """Rebuilds a full agent; optimizer moments come from the trainer state, if any."""
    directory = Path(directory)
    header = read_header(directory)
    config = config or load_run_config(directory)
    if Algo(header["algo"]) is not config.algo:
        raise CheckpointFormatError(f"{directory}: header algo '{header['algo']}' does not match its config")

    head = load_policy(directory)
    critics = CriticPair(*(load_net(directory / NET_FILES[name])
                           for name in ("critic1", "critic2", "critic1_target", "critic2_target")))
    agent = Agent.build(config, head.net.in_dim, np.random.default_rng(0))
    agent.head = head
    agent.critics = critics
    agent.temp = EntropyTemp(_header_float(header, "log_temperature"), _header_float(header, "target_entropy"))
    agent.params = RewardParams(alpha_m=_header_float(header, "alpha_m"),
                                alpha_max=_header_float(header, "alpha_max"),
                                psi=_header_float(header, "psi"),
                                prev_avg_reward=_header_float(header, "prev_avg_reward"))
    expected_eps = _header_float(header, "alpha_eps")
    if not math.isclose(agent.params.alpha_eps, expected_eps, rel_tol=0.0, abs_tol=1e-12):
        raise CheckpointFormatError(f"{directory}: alpha_eps {expected_eps} inconsistent with alpha_m")
    return agent


# ===============================================================
# RESUMABLE TRAINER STATE
# ===============================================================

def save_trainer_state(directory: Path, scalars: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> None:
    directory = Path(directory)
    (directory / TRAINER_JSON).write_text(json.dumps(scalars, indent=1, sort_keys=True), encoding="utf-8")
    with (directory / TRAINER_ARRAYS).open("wb") as handle:
        np.savez(handle, **arrays)


def load_trainer_state(directory: Path) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    directory = Path(directory)
    scalars_path, arrays_path = directory / TRAINER_JSON, directory / TRAINER_ARRAYS
    if not scalars_path.is_file() or not arrays_path.is_file():
        raise CheckpointFormatError(f"{directory}: not a resumable checkpoint (no {TRAINER_JSON}/{TRAINER_ARRAYS})")
    try:
        scalars = json.loads(scalars_path.read_text(encoding="utf-8"))
        with np.load(arrays_path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (ValueError, OSError) as exc:
        raise CheckpointFormatError(f"{directory}: unreadable trainer state ({exc})") from exc
    return scalars, arrays
