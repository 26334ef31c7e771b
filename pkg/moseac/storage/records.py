"""
CSV artifacts: per-episode training metrics, evaluation records, the
training-time evaluation log and the comparison table. Floats are written
with repr so reruns produce identical bytes.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from pydantic import ValidationError

from moseac.core.config import DESCRIPTIVES_HEADER, EVAL_HEADER, METRICS_HEADER, TTEST_HEADER
from moseac.core.errors import ConfigurationError, RecordParseError
from moseac.schemas.evaluation import ComparisonReport, EvalRecord, TrainingEvalRow

logger = logging.getLogger(__name__)

Cell = Union[int, float, str, bool]

TRAINING_EVAL_HEADER = "episode,success_rate,mean_energy,mean_time"


def format_cell(value: Cell) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_row(values: Iterable[Cell]) -> str:
    return ",".join(format_cell(v) for v in values)


class CsvLog:
    """
    Append-only CSV with a fixed header. Opening with `keep_before` (resume)
    keeps existing rows whose first column is below that episode and drops
    the rest; otherwise the file starts over.
    """

    def __init__(self, path: Path, header: str, keep_before: Optional[int] = None):
        self.path = Path(path)
        self.header = header
        self.path.parent.mkdir(parents=True, exist_ok=True)
        kept: List[str] = []
        if keep_before is not None and self.path.is_file():
            lines = self.path.read_text(encoding="utf-8").splitlines()
            if lines and lines[0] == header:
                kept = [line for line in lines[1:] if line and int(line.split(",", 1)[0]) < keep_before]
        self.path.write_text("\n".join([header, *kept]) + "\n", encoding="utf-8")

    def append(self, values: Sequence[Cell]) -> None:
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(format_row(values) + "\n")


class MetricsLog(CsvLog):
    def __init__(self, path: Path, keep_before: Optional[int] = None):
        super().__init__(path, METRICS_HEADER, keep_before)


class TrainingEvalLog(CsvLog):
    def __init__(self, path: Path, keep_before: Optional[int] = None):
        super().__init__(path, TRAINING_EVAL_HEADER, keep_before)

    def append_row(self, row: TrainingEvalRow) -> None:
        self.append([row.episode, row.success_rate, row.mean_energy, row.mean_time])


# ===============================================================
# EVALUATION RECORDS
# ===============================================================

def dumps_eval_records(records: Sequence[EvalRecord]) -> str:
    lines = [EVAL_HEADER]
    lines += [format_row([r.episode, r.success, r.energy_steps, r.time_seconds, r.mean_rate_hz]) for r in records]
    return "\n".join(lines) + "\n"


def write_eval_records(path: Path, records: Sequence[EvalRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_eval_records(records), encoding="utf-8")
    return path


def parse_eval_records(text: str, source: str = "<string>") -> List[EvalRecord]:
    rows = list(csv.reader(text.splitlines()))
    if not rows or ",".join(rows[0]) != EVAL_HEADER:
        raise RecordParseError(f"{source}: expected header '{EVAL_HEADER}'", line=1)

    records: List[EvalRecord] = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise RecordParseError(f"{source}: expected 5 columns, got {len(row)}", line=line)
        episode, success, energy, seconds, rate = row
        if success not in ("0", "1", "true", "false"):
            raise RecordParseError(f"{source}: success must be 0/1, got '{success}'", line=line)
        try:
            records.append(EvalRecord(episode=int(episode), success=success in ("1", "true"),
                                      energy_steps=int(energy), time_seconds=float(seconds),
                                      mean_rate_hz=float(rate)))
        except (ValueError, ValidationError) as exc:
            raise RecordParseError(f"{source}: invalid record ({exc.__class__.__name__}: {_first_error(exc)})", line=line)
    return records


def read_eval_records(path: Path) -> List[EvalRecord]:
    """Reads an evaluation CSV; a directory means its `eval.csv`."""
    path = Path(path)
    if path.is_dir():
        path = path / "eval.csv"
    if not path.is_file():
        raise ConfigurationError(f"Evaluation records not found: {path}")
    return parse_eval_records(path.read_text(encoding="utf-8"), source=str(path))


def _first_error(exc: Exception) -> str:
    if isinstance(exc, ValidationError):
        error = exc.errors()[0]
        return f"{'.'.join(str(p) for p in error['loc'])}: {error['msg']}"
    return str(exc)


# ===============================================================
# COMPARISON TABLE
# ===============================================================

def dumps_comparison(report: ComparisonReport) -> str:
    lines = [DESCRIPTIVES_HEADER]
    for summary in report.summaries:
        s = summary.stats
        lines.append(format_row([summary.method, summary.metric, s.n, s.mean, s.sd, s.se, s.cov]))
    lines += ["", TTEST_HEADER]
    pairwise = len({test.method for test in report.tests}) > 1
    for test in report.tests:
        metric = f"{test.metric}:{test.reference}-vs-{test.method}" if pairwise else test.metric
        r = test.result
        lines.append(format_row([metric, r.t, r.df, r.p]))
    return "\n".join(lines) + "\n"


def write_comparison(path: Path, report: ComparisonReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_comparison(report), encoding="utf-8")
    logger.info(f"💾 Comparison written to {path}")
    return path
