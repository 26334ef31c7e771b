import logging
import math
from pathlib import Path
from typing import Annotated, List

import typer
from rich.table import Table

from moseac.cli.deps import SourcesArgument, console, error_result, finish
from moseac.core.config import EXIT_OK, EXIT_USAGE
from moseac.schemas.evaluation import ComparisonReport
from moseac.schemas.util import CommandResult
from moseac.services import stats_service

logger = logging.getLogger(__name__)


def render_report(report: ComparisonReport) -> None:
    for metric in stats_service.METRICS:
        table = Table(title=f"{metric} descriptives")
        for column in ("Method", "N", "Mean", "SD", "SE", "COV", "Median", "Q1", "Q3", "Min", "Max"):
            table.add_column(column, justify="left" if column == "Method" else "right")
        for summary in report.summaries:
            if summary.metric != metric:
                continue
            s = summary.stats
            table.add_row(summary.method, str(s.n), *(f"{v:.3f}" for v in (
                s.mean, s.sd, s.se, s.cov, s.median, s.q1, s.q3, s.min, s.max)))
        console.print(table)

    table = Table(title="Paired samples t-test")
    for column in ("Pair", "Metric", "t", "df", "p", "Mean difference"):
        table.add_column(column)
    for test in report.tests:
        r = test.result
        t = f"{r.t:.3f}" if math.isfinite(r.t) else str(r.t)
        table.add_row(f"{test.reference} - {test.method}", test.metric, t, str(r.df), f"{r.p:.4g}",
                      f"{r.mean_difference:+.3f}" + (" (degenerate)" if test.degenerate else ""))
    console.print(table)
    for note in report.notes:
        console.print(f"note: {note}", markup=False, highlight=False)


def cmd_compare(sources: List[Path], out: Path) -> CommandResult:
    if len(sources) < 2:
        return CommandResult(message="compare needs at least two evaluation sources", code="COMPARE-USAGE",
                             exit_code=EXIT_USAGE)
    try:
        report = stats_service.compare_report(sources, out)
        render_report(report)
        lines = []
        for test in report.tests:
            sign = "lower" if test.result.mean_difference < 0 else "higher" if test.result.mean_difference > 0 else "equal"
            lines.append(f"{test.reference} {sign} {test.metric} than {test.method}")
        return CommandResult(
            message="; ".join(lines) + f". Comparison written to {report.csv_path}",
            code=report.csv_path,
            exit_code=EXIT_OK,
            result=[report.model_dump()],
        )
    except Exception as exc:
        return error_result(exc, code="COMPARE-ERROR")


def compare(
    sources: SourcesArgument,
    out: Annotated[Path, typer.Option("--out", help="Comparison CSV to write.")],
):
    """Descriptives and paired t-tests over two or more evaluation CSVs."""
    finish(cmd_compare(sources, out))
