import logging
from typing import Annotated

import typer
from rich.logging import RichHandler

from moseac.cli.app import register_commands

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="moseac",
    help="Elastic-time soft actor-critic: train, evaluate, compare and self-check.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)


@app.callback()
def main(verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )
    logger.debug("🔧 Logging configured (verbose=%s)", verbose)


register_commands(app)
