"""Order-statistic quantiles used by split conformal calibration.

Two rules live here:

* :func:`conformal_quantile`: the calibration quantile ``q̂``, i.e. the
  ``⌈(1-α)(n+1)⌉``-th smallest score, ``+inf`` when that rank exceeds
  ``n`` and ``-inf`` when it is below 1 (``α = 1``).
* :func:`sample_quantile`: the quantile of ``p`` task samples used by
  CQR, i.e. the ``m``-th smallest value with ``m = clamp(⌈ω·p⌉, 1, p)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..errors import InvalidInputError


def check_alpha(alpha: float) -> float:
    """Validate an error rate and return it as a float."""

    value = float(alpha)
    if not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha!r}")
    return value


@lru_cache(maxsize=256)
def _decimal(x: float) -> Fraction:
    """The shortest decimal that round-trips to ``x``, as an exact fraction.

    ``0.05`` becomes ``1/20`` rather than the binary neighbour of 0.05, so
    ``(1 - 0.05) * 20`` is exactly 19.
    """

    return Fraction(repr(float(x)))


def conformal_rank(n: int, alpha: float) -> int:
    """Return ``k = ⌈(1-α)(n+1)⌉`` for ``n`` calibration scores."""

    if n < 1:
        raise InvalidInputError("at least one calibration score is required")
    return math.ceil((1 - _decimal(check_alpha(alpha))) * (n + 1))


def ceil_alpha_rank(n: int, alpha: float) -> int:
    """Return ``l = ⌈(n+1)α⌉`` (the Beta-Binomial law's second parameter)."""

    return math.ceil((n + 1) * _decimal(check_alpha(alpha)))


def _as_scores(scores: Sequence[float] | np.ndarray) -> np.ndarray:
    values = np.asarray(scores, dtype=float).ravel()
    if values.size == 0:
        raise InvalidInputError("score list is empty")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("scores must be finite")
    return values


def conformal_quantile(scores: Sequence[float] | np.ndarray, alpha: float) -> float:
    """Return the calibration quantile ``q̂`` of ``scores`` at error rate ``alpha``."""

    values = _as_scores(scores)
    n = values.size
    k = conformal_rank(n, alpha)
    if k > n:
        return math.inf
    if k < 1:
        return -math.inf
    return float(np.partition(values, k - 1)[k - 1])


def sample_quantile(omega: float, values: Sequence[float] | np.ndarray) -> float:
    """Return the ``ω``-quantile of ``values`` as one of its elements."""

    samples = np.asarray(values, dtype=float).ravel()
    p = samples.size
    if p == 0:
        raise InvalidInputError("sample list is empty")
    m = sample_rank(omega, p)
    return float(np.partition(samples, m - 1)[m - 1])


def sample_rank(omega: float, p: int) -> int:
    """Return ``m = clamp(⌈ω·p⌉, 1, p)``."""

    if not (0.0 <= omega <= 1.0):
        raise InvalidInputError(f"omega must lie in [0, 1], got {omega!r}")
    return min(max(math.ceil(_decimal(omega) * p), 1), p)


__all__ = [
    "ceil_alpha_rank",
    "check_alpha",
    "conformal_quantile",
    "conformal_rank",
    "sample_quantile",
    "sample_rank",
]
