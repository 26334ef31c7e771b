import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich.console import Console

from moseac.core.config import EXIT_DIVERGED, EXIT_FAILURE, EXIT_FORMAT, EXIT_OK, EXIT_USAGE
from moseac.core.errors import (
    CheckpointFormatError, ConfigurationError, ContractViolation, RecordParseError, TrainingDivergenceError,
)
from moseac.schemas.config import Algo
from moseac.schemas.util import CommandResult

logger = logging.getLogger(__name__)

console = Console()

# ===============================================================
# SHARED OPTIONS
# ===============================================================

ConfigOption = Annotated[Optional[Path], typer.Option("--config", help="Flat `key = value` run configuration.")]
AlgoOption = Annotated[Optional[Algo], typer.Option("--algo", help="Training variant.")]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Seed for every random stream.")]
EpisodesOption = Annotated[Optional[int], typer.Option("--episodes", min=1, help="Number of episodes.")]
WorkersOption = Annotated[Optional[int], typer.Option("--workers", min=1, help="Evaluation threads.")]
TrackOption = Annotated[Optional[Path], typer.Option("--track", help="Track file (track-v1 format).")]
CkptOption = Annotated[Path, typer.Option("--ckpt", help="Agent checkpoint directory.")]
SourcesArgument = Annotated[List[Path], typer.Argument(help="Evaluation CSVs or directories holding eval.csv; the first is the reference.")]

# Exit code per deliberate error; anything else is an unexpected failure.
EXIT_CODES = (
    (TrainingDivergenceError, EXIT_DIVERGED),
    (CheckpointFormatError, EXIT_FORMAT),
    (ConfigurationError, EXIT_USAGE),
    (RecordParseError, EXIT_USAGE),
    (ContractViolation, EXIT_USAGE),
)


def error_result(exc: Exception, code: str) -> CommandResult:
    for error_type, exit_code in EXIT_CODES:
        if isinstance(exc, error_type):
            return CommandResult(message=str(exc), code=code, exit_code=exit_code)
    logger.exception(f"🔴 Unexpected error: {exc}")
    return CommandResult(message=f"Unexpected error: {exc}", code="SYS-ERROR", exit_code=EXIT_FAILURE)


def finish(result: CommandResult) -> None:
    """Prints the outcome and leaves with its exit code."""
    style = "green" if result.exit_code == EXIT_OK else "red"
    console.print(result.message, style=style, markup=False, highlight=False)
    raise typer.Exit(code=result.exit_code)
