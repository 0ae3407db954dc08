"""Vectorised scores and intervals for repeated calibration on one dataset.

A record's score and interval geometry do not depend on which other
records are in the calibration fold, so Monte-Carlo trials compute them
once in a :class:`ScoreTable` and then only re-rank scores per trial.
Every value here matches the per-record path in :mod:`.predictors`
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import InvalidInputError
from ..models import CalibrationRecord, Interval, Method, SampleReduction
from .methods import method_for
from .predictors import Predictor
from .quantile import check_alpha, conformal_quantile


@dataclass(frozen=True, eq=False)
class IntervalBatch:
    """Aligned arrays of interval bounds and lengths."""

    lower: np.ndarray
    upper: np.ndarray
    lengths: np.ndarray

    def __len__(self) -> int:
        return int(self.lower.size)

    def covers(self, z: np.ndarray) -> np.ndarray:
        """Boolean mask of ``lower <= z <= upper`` (false for empty intervals)."""

        z = np.asarray(z, dtype=float)
        return (self.lower <= self.upper) & (self.lower <= z) & (z <= self.upper)

    @classmethod
    def from_intervals(cls, intervals: Sequence[Interval]) -> "IntervalBatch":
        return cls(
            lower=np.array([iv.lower for iv in intervals], dtype=float),
            upper=np.array([iv.upper for iv in intervals], dtype=float),
            lengths=np.array([iv.length for iv in intervals], dtype=float),
        )

    def to_intervals(self) -> List[Interval]:
        return [
            Interval(float(lo), float(hi)) for lo, hi in zip(self.lower, self.upper)
        ]


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Per-record scores and geometry for one (method, alpha) pair."""

    method: Method
    alpha: float
    reduction: SampleReduction
    scores: np.ndarray
    base_low: np.ndarray
    base_high: np.ndarray
    scale: np.ndarray
    true_output: np.ndarray
    class_label: np.ndarray

    def __len__(self) -> int:
        return int(self.scores.size)

    def calibrate(self, indices: Optional[np.ndarray] = None) -> Predictor:
        """Calibrate on the records at ``indices`` (all records when omitted)."""

        chosen = self.scores if indices is None else self.scores[indices]
        if chosen.size == 0:
            raise InvalidInputError("calibration requires at least one record")
        qhat = conformal_quantile(chosen, self.alpha)
        return Predictor(self.method, self.alpha, qhat, int(chosen.size), self.reduction)

    def intervals(
        self, qhat: float, indices: Optional[np.ndarray] = None
    ) -> IntervalBatch:
        """Intervals for the records at ``indices`` under calibration ``qhat``."""

        low = self.base_low if indices is None else self.base_low[indices]
        high = self.base_high if indices is None else self.base_high[indices]
        scale = self.scale if indices is None else self.scale[indices]
        lower = low - scale * qhat
        upper = high + scale * qhat
        lengths = np.where(lower > upper, 0.0, np.maximum(0.0, upper - lower))
        return IntervalBatch(lower=lower, upper=upper, lengths=lengths)


def build_score_table(
    records: Sequence[CalibrationRecord],
    method: "Method | str",
    alpha: float,
    *,
    reduction: SampleReduction = SampleReduction.FIRST,
) -> ScoreTable:
    """Score every record once and keep its interval geometry."""

    if len(records) == 0:
        raise InvalidInputError("score table requires at least one record")
    adapter = method_for(method)
    a = check_alpha(alpha)
    red = SampleReduction(reduction)
    n = len(records)
    scores = np.empty(n)
    base_low = np.empty(n)
    base_high = np.empty(n)
    scale = np.empty(n)
    for i, record in enumerate(records):
        geometry = adapter.geometry(record.task_samples, a, red)
        scores[i] = adapter.score(record.task_samples, record.true_output, a, red)
        base_low[i] = geometry.base_low
        base_high[i] = geometry.base_high
        scale[i] = geometry.scale
    return ScoreTable(
        method=adapter.method,
        alpha=a,
        reduction=red,
        scores=scores,
        base_low=base_low,
        base_high=base_high,
        scale=scale,
        true_output=np.array([r.true_output for r in records], dtype=float),
        class_label=np.array([r.class_label for r in records], dtype=int),
    )


__all__ = ["IntervalBatch", "ScoreTable", "build_score_table"]
