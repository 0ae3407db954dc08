"""Core value objects shared by the conformal, validation and protocol layers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .errors import InvalidInputError, MethodMismatchError

__all__ = [
    "CalibrationRecord",
    "Interval",
    "Method",
    "SampleReduction",
]


class Method(str, enum.Enum):
    """Which nonconformity score / interval construction a predictor uses."""

    AR = "AR"
    LWR = "LWR"
    CQR = "CQR"

    @classmethod
    def parse(cls, raw: "str | Method") -> "Method":
        """Accept ``"ar"``, ``"AR"`` or a :class:`Method` member."""

        if isinstance(raw, Method):
            return raw
        try:
            return cls(str(raw).strip().upper())
        except ValueError as exc:
            raise MethodMismatchError(
                f"unknown method {raw!r}; expected one of "
                f"{', '.join(m.value for m in cls)}"
            ) from exc


class SampleReduction(str, enum.Enum):
    """How AR turns a list of task samples into a single point estimate."""

    FIRST = "first"
    MEAN = "mean"


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lower, upper]``.

    ``lower > upper`` encodes the empty set. Either bound may be infinite.
    """

    lower: float
    upper: float

    @classmethod
    def empty(cls) -> "Interval":
        return cls(math.inf, -math.inf)

    @classmethod
    def unbounded(cls) -> "Interval":
        return cls(-math.inf, math.inf)

    @property
    def is_empty(self) -> bool:
        return self.lower > self.upper

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    @property
    def length(self) -> float:
        if self.is_empty:
            return 0.0
        return max(0.0, self.upper - self.lower)

    def contains(self, z: float) -> bool:
        return (not self.is_empty) and self.lower <= z <= self.upper

    def midpoint(self) -> float:
        """Midpoint ``(lower + upper) / 2``; callers check boundedness first."""

        return 0.5 * (self.lower + self.upper)

    def clamp(self, lo: float, hi: float) -> "Interval":
        """Intersect with ``[lo, hi]``.

        Only sound when the target is known to lie in ``[lo, hi]``; then it
        never removes a covered target.
        """

        if lo > hi:
            raise InvalidInputError(f"clamp range is inverted: [{lo}, {hi}]")
        if self.is_empty:
            return self
        return Interval(max(self.lower, lo), min(self.upper, hi))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.lower, self.upper)


@dataclass(frozen=True)
class CalibrationRecord:
    """One example: task outputs of the recoveries plus the true task output.

    ``task_samples`` has length ``p`` (``p = 1`` for a point estimator).
    """

    task_samples: Tuple[float, ...]
    true_output: float
    class_label: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.task_samples, tuple):
            object.__setattr__(
                self, "task_samples", tuple(float(v) for v in self.task_samples)
            )
        if len(self.task_samples) == 0:
            raise InvalidInputError("task_samples must not be empty")
        if not all(math.isfinite(v) for v in self.task_samples):
            raise InvalidInputError("task_samples must be finite")
        if not math.isfinite(self.true_output):
            raise InvalidInputError("true_output must be finite")
        if self.class_label not in (0, 1):
            raise InvalidInputError(
                f"class_label must be 0 or 1, got {self.class_label!r}"
            )

    @classmethod
    def build(
        cls, task_samples: Sequence[float], true_output: float, class_label: int = 0
    ) -> "CalibrationRecord":
        """Convenience constructor that coerces the sample sequence."""

        return cls(
            task_samples=tuple(float(v) for v in task_samples),
            true_output=float(true_output),
            class_label=int(class_label),
        )

    @property
    def p(self) -> int:
        return len(self.task_samples)
