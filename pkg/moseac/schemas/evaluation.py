import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

# ===============================================================
# EVALUATION RECORDS
# ===============================================================


class EvalRecord(BaseModel):
    """One evaluation episode. Energy is counted in decisions, time in simulated seconds."""
    model_config = ConfigDict(frozen=True)

    episode: int = Field(..., ge=0)
    success: bool
    energy_steps: int = Field(..., ge=1, description="Decision steps taken")
    time_seconds: float = Field(..., gt=0, description="Sum of snapped durations")
    mean_rate_hz: float = Field(..., gt=0, description="energy_steps / time_seconds")


class TrainingEvalRow(BaseModel):
    episode: int
    success_rate: float
    mean_energy: float
    mean_time: float


# ===============================================================
# STATISTICS
# ===============================================================


class Descriptives(BaseModel):
    """Sample statistics with SD over N - 1, plus the five box-plot numbers."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2)
    mean: float
    sd: float = Field(..., ge=0)
    median: float
    q1: float
    q3: float
    min: float
    max: float

    @computed_field
    @property
    def se(self) -> float:
        return self.sd / self.n ** 0.5

    @computed_field
    @property
    def cov(self) -> float:
        """nan for a zero mean."""
        if self.mean == 0.0:
            return math.nan
        return self.sd / self.mean


class PairedTResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    df: int = Field(..., ge=1)
    p: float = Field(..., ge=0.0, le=1.0)
    mean_difference: float


class MethodSummary(BaseModel):
    method: str
    metric: str
    stats: Descriptives


class PairedComparison(BaseModel):
    """A paired test row; `degenerate` marks zero-variance differences (t reported as 0 or ±inf)."""

    reference: str
    method: str
    metric: str
    result: PairedTResult
    degenerate: bool = False


class ComparisonReport(BaseModel):
    summaries: List[MethodSummary]
    tests: List[PairedComparison]
    notes: List[str] = Field(default_factory=list)
    csv_path: Optional[str] = None
