"""Per-trial coverage and length metrics.

Every public function accepts either a sequence of
:class:`~task_conformal.models.Interval` or an
:class:`~task_conformal.conformal.table.IntervalBatch`; the Monte-Carlo
runner uses the batch form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..conformal.table import IntervalBatch
from ..errors import InvalidInputError
from ..models import Interval

# Right-closed length bins used for the size-stratified breakdown.
DEFAULT_BIN_EDGES: Tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2, 1.0)

Intervals = Union[Sequence[Interval], IntervalBatch]


@dataclass(frozen=True)
class ClassCoverage:
    """Coverage restricted to each class; ``None`` when a class is absent."""

    class0: Optional[float]
    class1: Optional[float]
    count0: int = 0
    count1: int = 0

    def as_tuple(self) -> Tuple[Optional[float], Optional[float]]:
        return (self.class0, self.class1)


@dataclass(frozen=True)
class StratumCoverage:
    """One length bin ``(lower, upper]``; the overflow bin has ``upper = inf``."""

    lower: float
    upper: float
    coverage: Optional[float]
    count: int

    @property
    def is_overflow(self) -> bool:
        return math.isinf(self.upper)

    def label(self) -> str:
        if self.is_overflow:
            return f">{self.lower:g}"
        return f"({self.lower:g},{self.upper:g}]"


def as_batch(intervals: Intervals) -> IntervalBatch:
    if isinstance(intervals, IntervalBatch):
        return intervals
    return IntervalBatch.from_intervals(list(intervals))


def _aligned(batch: IntervalBatch, values: Sequence[float] | np.ndarray) -> np.ndarray:
    array = np.asarray(values, dtype=float).ravel()
    if array.size != len(batch):
        raise InvalidInputError(
            f"{len(batch)} intervals but {array.size} target values"
        )
    return array


def coverage_mask(intervals: Intervals, zs: Sequence[float] | np.ndarray) -> np.ndarray:
    batch = as_batch(intervals)
    return batch.covers(_aligned(batch, zs))


def empirical_coverage(intervals: Intervals, zs: Sequence[float] | np.ndarray) -> float:
    batch = as_batch(intervals)
    if len(batch) == 0:
        raise InvalidInputError("coverage of an empty test fold is undefined")
    return float(np.mean(coverage_mask(batch, zs)))


def mean_interval_length(intervals: Intervals) -> float:
    batch = as_batch(intervals)
    if len(batch) == 0:
        raise InvalidInputError("mean length of no intervals is undefined")
    if np.isinf(batch.lengths).any():
        return math.inf
    return float(np.mean(batch.lengths))


def class_conditional_coverage(
    intervals: Intervals,
    zs: Sequence[float] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
) -> ClassCoverage:
    batch = as_batch(intervals)
    covered = coverage_mask(batch, zs)
    label_array = np.asarray(labels, dtype=int).ravel()
    if label_array.size != covered.size:
        raise InvalidInputError(
            f"{covered.size} intervals but {label_array.size} class labels"
        )
    results: List[Optional[float]] = []
    counts: List[int] = []
    for cls in (0, 1):
        members = label_array == cls
        count = int(members.sum())
        counts.append(count)
        results.append(float(covered[members].mean()) if count else None)
    return ClassCoverage(results[0], results[1], counts[0], counts[1])


def check_bin_edges(bin_edges: Sequence[float]) -> np.ndarray:
    edges = np.asarray(bin_edges, dtype=float).ravel()
    if edges.size < 2:
        raise InvalidInputError("at least two bin edges are required")
    if not np.all(np.isfinite(edges)):
        raise InvalidInputError("bin edges must be finite")
    if np.any(np.diff(edges) <= 0):
        raise InvalidInputError(f"bin edges must strictly increase, got {edges.tolist()}")
    return edges


def bin_indices(lengths: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin of every length; ``len(edges) - 1`` is the overflow bin.

    Bins are right-closed, and lengths at or below the first edge fall into
    the first bin.
    """

    positions = np.searchsorted(edges, lengths, side="left")
    return np.clip(positions, 1, edges.size) - 1


def size_stratified_coverage(
    intervals: Intervals,
    zs: Sequence[float] | np.ndarray,
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
) -> List[StratumCoverage]:
    edges = check_bin_edges(bin_edges)
    batch = as_batch(intervals)
    covered = coverage_mask(batch, zs)
    bins = bin_indices(batch.lengths, edges)
    uppers = list(edges[1:]) + [math.inf]
    lowers = list(edges[:-1]) + [float(edges[-1])]
    strata: List[StratumCoverage] = []
    for index, (lo, hi) in enumerate(zip(lowers, uppers)):
        members = bins == index
        count = int(members.sum())
        strata.append(
            StratumCoverage(
                lower=float(lo),
                upper=float(hi),
                coverage=float(covered[members].mean()) if count else None,
                count=count,
            )
        )
    return strata


__all__ = [
    "ClassCoverage",
    "DEFAULT_BIN_EDGES",
    "StratumCoverage",
    "as_batch",
    "bin_indices",
    "check_bin_edges",
    "class_conditional_coverage",
    "coverage_mask",
    "empirical_coverage",
    "mean_interval_length",
    "size_stratified_coverage",
]
