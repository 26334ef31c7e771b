from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.table import Table

from moseac.cli.deps import SeedOption, TrackOption, console, error_result, finish
from moseac.core.config import EXIT_FAILURE, EXIT_OK
from moseac.envsim.track import load_track
from moseac.schemas.util import CommandResult
from moseac.services.selfcheck_service import run_selfcheck


def cmd_selfcheck(seed: Optional[int] = None, track: Optional[Path] = None,
                  corrupt_checkpoint: bool = False) -> CommandResult:
    try:
        results = run_selfcheck(seed or 0, load_track(track) if track else None, corrupt_checkpoint)
    except Exception as exc:
        return error_result(exc, code="SELFCHECK-ERROR")

    table = Table(title="Self-check")
    table.add_column("Suite")
    table.add_column("Result")
    table.add_column("Detail")
    for result in results:
        table.add_row(result.name, "[green]pass[/green]" if result.passed else "[red]FAIL[/red]", result.detail)
    console.print(table)

    failed = [r for r in results if not r.passed]
    if failed:
        return CommandResult(message=f"Suite '{failed[0].name}' failed: {failed[0].detail}", code=failed[0].name,
                             exit_code=EXIT_FAILURE, result=[r.model_dump() for r in results])
    return CommandResult(message=f"All {len(results)} suites passed", code="SELFCHECK-OK", exit_code=EXIT_OK,
                         result=[r.model_dump() for r in results])


def selfcheck(
    seed: SeedOption = None,
    track: TrackOption = None,
    corrupt_checkpoint: Annotated[bool, typer.Option("--corrupt-checkpoint", hidden=True)] = False,
):
    """Gradient oracle, simulator determinism, reward formulas and checkpoint round trip."""
    finish(cmd_selfcheck(seed, track, corrupt_checkpoint))
