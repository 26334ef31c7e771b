"""
Descriptive statistics and paired t-tests over evaluation records.

Two-tailed p-values use the regularized incomplete beta function:
p = I_{df / (df + t^2)}(df / 2, 1 / 2).
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import betainc

from moseac.core.errors import ContractViolation, DegenerateTestError
from moseac.schemas.evaluation import (
    ComparisonReport, Descriptives, EvalRecord, MethodSummary, PairedComparison, PairedTResult,
)
from moseac.storage.records import read_eval_records, write_comparison

logger = logging.getLogger(__name__)

METRICS = ("energy_steps", "time_seconds")
NORMALITY_NOTE = "Shapiro-Wilk normality tests are not computed; the paired t-test assumes normal differences."


def descriptives(samples: Sequence[float]) -> Descriptives:
    values = np.asarray(samples, dtype=np.float64)
    if values.size < 2:
        raise ContractViolation(f"descriptives need at least 2 samples, got {values.size}")
    mean = float(np.mean(values))
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    return Descriptives(n=int(values.size), mean=mean, sd=float(np.std(values, ddof=1)),
                        median=float(median), q1=float(q1), q3=float(q3),
                        min=float(np.min(values)), max=float(np.max(values)))


def two_tailed_p(t: float, df: int) -> float:
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> PairedTResult:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"paired samples differ in length ({a.size} vs {b.size})")
    if a.size < 2:
        raise ContractViolation(f"paired t-test needs at least 2 pairs, got {a.size}")
    diff = a - b
    mean = float(np.mean(diff))
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        raise DegenerateTestError("paired differences have zero variance", mean_difference=mean)
    df = a.size - 1
    t = mean / (sd / math.sqrt(a.size))
    return PairedTResult(t=t, df=df, p=two_tailed_p(t, df), mean_difference=mean)


def degenerate_result(mean_difference: float, df: int) -> PairedTResult:
    """t = 0, p = 1 for identical samples; t = ±inf, p = 0 for a constant nonzero gap."""
    if mean_difference == 0.0:
        return PairedTResult(t=0.0, df=df, p=1.0, mean_difference=0.0)
    return PairedTResult(t=math.copysign(math.inf, mean_difference), df=df, p=0.0,
                         mean_difference=mean_difference)


def _metric(records: List[EvalRecord], metric: str) -> List[float]:
    return [float(getattr(r, metric)) for r in records]


def _method_name(path: Path) -> str:
    path = Path(path)
    if path.is_dir():
        return path.name
    return path.parent.name if path.name == "eval.csv" else path.stem


def compare_records(named: Dict[str, List[EvalRecord]]) -> ComparisonReport:
    """
    The first method is the reference and is paired with every other one,
    record by record in episode order.
    """
    if len(named) < 2:
        raise ContractViolation("comparison needs at least two methods")
    ordered = {name: sorted(records, key=lambda r: r.episode) for name, records in named.items()}
    reference, *others = ordered
    ref_records = ordered[reference]

    for name in others:
        if len(ordered[name]) != len(ref_records):
            raise ContractViolation(
                f"pairing needs equal counts: {reference} has {len(ref_records)} records, {name} has {len(ordered[name])}"
            )
        if [r.episode for r in ordered[name]] != [r.episode for r in ref_records]:
            raise ContractViolation(f"episode indices of {name} do not match {reference}")

    summaries = [
        MethodSummary(method=name, metric=metric, stats=descriptives(_metric(records, metric)))
        for metric in METRICS for name, records in ordered.items()
    ]
    tests: List[PairedComparison] = []
    notes = [NORMALITY_NOTE]
    for name in others:
        for metric in METRICS:
            ref_values, values = _metric(ref_records, metric), _metric(ordered[name], metric)
            try:
                result, degenerate = paired_t_test(ref_values, values), False
            except DegenerateTestError as exc:
                result, degenerate = degenerate_result(exc.mean_difference, len(values) - 1), True
                notes.append(f"{metric} ({reference} vs {name}): zero-variance differences, "
                             f"mean difference {exc.mean_difference!r}")
            tests.append(PairedComparison(reference=reference, method=name, metric=metric,
                                          result=result, degenerate=degenerate))
    return ComparisonReport(summaries=summaries, tests=tests, notes=notes)


def compare_report(sources: Sequence[Path], out: Optional[Path] = None) -> ComparisonReport:
    """Reads each evaluation CSV (or directory holding eval.csv) and writes the comparison table."""
    named: Dict[str, List[EvalRecord]] = {}
    for index, source in enumerate(sources):
        name = _method_name(source)
        if name in named:
            name = f"{name}#{index}"
        named[name] = read_eval_records(source)
    report = compare_records(named)
    if out is not None:
        report.csv_path = str(write_comparison(out, report))
    return report
