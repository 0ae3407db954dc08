"""Exception hierarchy shared by the library and the command-line layer.

Each error class maps to a process exit code in :func:`exit_code_for`, so
``main.py`` can turn any failure into a stable status without knowing
where it was raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ACCEPTANCE = 4


class TaskConformalError(RuntimeError):
    """Base class for every error raised by :mod:`task_conformal`."""


class InvalidInputError(TaskConformalError, ValueError):
    """Raised when an operation receives arguments outside its contract."""


class DegenerateSamplesError(TaskConformalError):
    """Raised when task samples have zero spread where a spread is required."""


class MethodMismatchError(TaskConformalError):
    """Raised for unknown methods or a predictor used with the wrong method."""


class InvalidSpecError(TaskConformalError, ValueError):
    """Raised when a problem spec or dataset size is not usable."""


class UndefinedCenterError(TaskConformalError):
    """Raised when the midpoint of an empty or unbounded interval is requested."""


class DegenerateFoldError(TaskConformalError):
    """Raised when a calibration/test partition leaves one fold empty."""


class DatasetError(TaskConformalError):
    """Raised when a dataset directory is missing or cannot be parsed."""


@dataclass
class NumericalError(TaskConformalError):
    """Raised when a factorization fails even after the jitter retry.

    Attributes:
        message: Short description of the failing operation.
        diagnostics: Shape, jitter and spectrum details for the log.
    """

    message: str
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __str__(self) -> str:
        if not self.diagnostics:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
        return f"{self.message} ({details})"


class RoundError(TaskConformalError):
    """A per-round failure in the multi-round protocol, tagged with its round."""

    def __init__(self, round_index: int, cause: Exception) -> None:
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index
        self.cause = cause


def exit_code_for(exc: BaseException) -> int:
    """Return the process exit code for ``exc``."""

    # Imported lazily: config_loader imports this module.
    from .config_loader import ConfigError

    if isinstance(exc, RoundError):
        return exit_code_for(exc.cause)
    if isinstance(
        exc,
        (ConfigError, InvalidSpecError, DegenerateFoldError, DegenerateSamplesError),
    ):
        return EXIT_CONFIG
    if isinstance(exc, (DatasetError, OSError)):
        return EXIT_IO
    return EXIT_INTERNAL


def describe(exc: BaseException, *, fallback: Optional[str] = None) -> str:
    """One-line description used in CLI error messages."""

    text = str(exc).strip()
    return text or fallback or exc.__class__.__name__


__all__ = [
    "DatasetError",
    "DegenerateFoldError",
    "DegenerateSamplesError",
    "EXIT_ACCEPTANCE",
    "EXIT_CONFIG",
    "EXIT_INTERNAL",
    "EXIT_IO",
    "EXIT_OK",
    "InvalidInputError",
    "InvalidSpecError",
    "MethodMismatchError",
    "NumericalError",
    "RoundError",
    "TaskConformalError",
    "UndefinedCenterError",
    "describe",
    "exit_code_for",
]
