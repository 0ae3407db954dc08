"""Nonconformity scores for the three interval constructions.

* AR: absolute residual ``|z - ẑ|`` of a point estimate.
* LWR: residual from the sample mean, in units of the sample spread.
* CQR: signed distance outside the ``[ẑ(α/2), ẑ(1-α/2)]`` sample band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import DegenerateSamplesError, InvalidInputError
from ..models import SampleReduction
from .quantile import check_alpha, sample_quantile


@dataclass(frozen=True)
class LwrStats:
    """Sample mean and population standard deviation of the task samples."""

    mean: float
    std: float


def _as_samples(task_samples: Sequence[float] | np.ndarray) -> np.ndarray:
    values = np.asarray(task_samples, dtype=float).ravel()
    if values.size == 0:
        raise InvalidInputError("task_samples must not be empty")
    return values


def ar_score(z_hat: float, z: float) -> float:
    return abs(z - z_hat)


def reduce_samples(
    task_samples: Sequence[float] | np.ndarray,
    reduction: SampleReduction = SampleReduction.FIRST,
) -> float:
    """Collapse task samples to the single ``ẑ`` used by AR."""

    values = _as_samples(task_samples)
    if SampleReduction(reduction) is SampleReduction.MEAN:
        return float(np.mean(values))
    return float(values[0])


def lwr_stats(task_samples: Sequence[float] | np.ndarray) -> LwrStats:
    values = _as_samples(task_samples)
    # ddof=0: divide by p, not p - 1.
    return LwrStats(mean=float(np.mean(values)), std=float(np.std(values)))


def require_spread(stats: LwrStats) -> LwrStats:
    if not stats.std > 0.0:
        raise DegenerateSamplesError(
            f"task samples are all identical (mean={stats.mean!r}); "
            "LWR needs a positive spread"
        )
    return stats


def lwr_score(task_samples: Sequence[float] | np.ndarray, z: float) -> float:
    stats = require_spread(lwr_stats(task_samples))
    return abs(z - stats.mean) / stats.std


def cqr_band(
    task_samples: Sequence[float] | np.ndarray, alpha: float
) -> Tuple[float, float]:
    """Return ``(ẑ(α/2), ẑ(1-α/2))`` for the given samples."""

    values = _as_samples(task_samples)
    a = check_alpha(alpha)
    return sample_quantile(a / 2.0, values), sample_quantile(1.0 - a / 2.0, values)


def cqr_score(
    task_samples: Sequence[float] | np.ndarray, z: float, alpha: float
) -> float:
    """Signed CQR score; negative when ``z`` sits strictly inside the band."""

    low, high = cqr_band(task_samples, alpha)
    return max(low - z, z - high)


__all__ = [
    "LwrStats",
    "ar_score",
    "cqr_band",
    "cqr_score",
    "lwr_score",
    "lwr_stats",
    "reduce_samples",
    "require_spread",
]
