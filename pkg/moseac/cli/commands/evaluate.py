import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from moseac.cli.deps import CkptOption, EpisodesOption, SeedOption, TrackOption, WorkersOption, error_result, finish
from moseac.core.config import EVAL_EPISODES, EXIT_OK
from moseac.envsim.track import load_track
from moseac.schemas.util import CommandResult
from moseac.services import evaluation_service
from moseac.storage.checkpoints import load_run_config
from moseac.storage.records import write_eval_records

logger = logging.getLogger(__name__)


def cmd_eval(ckpt: Path, out: Path, episodes: Optional[int] = None, seed: Optional[int] = None,
             workers: Optional[int] = None, track: Optional[Path] = None,
             stochastic: bool = False) -> CommandResult:
    try:
        # 1. Track: flag first, then the one the agent was trained on
        track_path = track or load_run_config(ckpt).track
        track_spec = load_track(track_path)

        # 2. Episodes
        n_episodes = episodes or EVAL_EPISODES
        records = evaluation_service.evaluate(ckpt, track_spec, n_episodes, seed or 0,
                                              workers=workers or 1, stochastic=stochastic)

        # 3. Records
        path = write_eval_records(out, records)
        successes = sum(r.success for r in records)
        return CommandResult(
            message=f"Wrote {len(records)} evaluation records to {path} ({successes} successful)",
            code=str(path),
            exit_code=EXIT_OK,
            result=[r.model_dump() for r in records],
        )
    except Exception as exc:
        return error_result(exc, code="EVAL-ERROR")


def evaluate(
    ckpt: CkptOption,
    out: Annotated[Path, typer.Option("--out", help="Evaluation CSV to write.")],
    episodes: EpisodesOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    track: TrackOption = None,
    stochastic: Annotated[bool, typer.Option("--stochastic", help="Sample actions instead of using the mean.")] = False,
):
    """Evaluate a checkpoint and write one EvalRecord row per episode."""
    finish(cmd_eval(ckpt, out, episodes, seed, workers, track, stochastic))
