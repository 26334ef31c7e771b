from typing import Any, Dict, Optional


class ElasticError(Exception):
    """Base class for every error raised on purpose by the toolkit."""


class ContractViolation(ElasticError, ValueError):
    """A caller broke an operation's precondition."""


class ConfigurationError(ElasticError, ValueError):
    """Invalid configuration, track or environment capability."""


class TrainingDivergenceError(ElasticError, RuntimeError):
    """
    Non-finite gradient or loss. `diagnostics` holds whatever the caller
    could collect at the point of failure (losses, alpha values, batch stats).
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CheckpointFormatError(ElasticError, OSError):
    """Unreadable or version-mismatched checkpoint."""


class DegenerateTestError(ElasticError, ValueError):
    """Paired differences with zero variance; |t| is infinite unless the mean is 0."""

    def __init__(self, message: str, mean_difference: float):
        super().__init__(message)
        self.mean_difference = mean_difference


class RecordParseError(ElasticError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
