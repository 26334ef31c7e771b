import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from moseac.cli.deps import (
    AlgoOption, ConfigOption, EpisodesOption, SeedOption, TrackOption, WorkersOption, error_result, finish,
)
from moseac.core.config import EXIT_OK, RESOLVED_CONFIG_NAME
from moseac.core.errors import ConfigurationError
from moseac.envsim.track import load_track
from moseac.schemas.config import Algo, resolve_run_config
from moseac.schemas.util import CommandResult
from moseac.services import training_service

logger = logging.getLogger(__name__)


def cmd_train(config: Optional[Path] = None, algo: Optional[Algo] = None, seed: Optional[int] = None,
              out: Optional[Path] = None, episodes: Optional[int] = None, workers: Optional[int] = None,
              track: Optional[Path] = None, literal_reward_storage: Optional[bool] = None,
              resume: Optional[Path] = None) -> CommandResult:
    """
    Resolves the run configuration (file, then flags) and trains.
    With --resume and no --config, the checkpoint's own resolved_config is the base.
    """
    try:
        # 1. Configuration
        if resume is not None and config is None:
            config = Path(resume) / RESOLVED_CONFIG_NAME
            if not config.is_file():
                raise ConfigurationError(f"Resume checkpoint has no {RESOLVED_CONFIG_NAME}: {resume}")
        run_config = resolve_run_config(config, {
            "algo": algo, "seed": seed, "out": out, "t_max": episodes, "workers": workers,
            "track": track, "literal_reward_storage": literal_reward_storage or None,
        })
        track_spec = load_track(run_config.track)

        # 2. Training
        result = training_service.run_training(run_config, track_spec, run_config.out, resume=resume)

        # 3. Success
        return CommandResult(
            message=f"Trained {result.episodes} episodes ({result.actor_updates} actor updates); "
                    f"final checkpoint in {result.final_checkpoint}",
            code=result.final_checkpoint,
            exit_code=EXIT_OK,
            result=[result.model_dump()],
        )
    except Exception as exc:
        return error_result(exc, code="TRAIN-ERROR")


def train(
    config: ConfigOption = None,
    algo: AlgoOption = None,
    seed: SeedOption = None,
    out: Annotated[Optional[Path], typer.Option("--out", help="Output directory.")] = None,
    episodes: EpisodesOption = None,
    workers: WorkersOption = None,
    track: TrackOption = None,
    literal_reward_storage: Annotated[bool, typer.Option(
        "--literal-reward-storage", help="Store shaped rewards at collection time.")] = False,
    resume: Annotated[Optional[Path], typer.Option("--resume", help="Resumable checkpoint directory.")] = None,
):
    """Train an agent; writes metrics.csv and checkpoints under --out."""
    finish(cmd_train(config, algo, seed, out, episodes, workers, track, literal_reward_storage, resume))
