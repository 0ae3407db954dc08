"""The Beta-Binomial law of per-trial empirical coverage.

With ``n_cal`` calibration and ``n_test`` test points drawn exchangeably,
the number of covered test points is ``BetaBin(n_test, a, b)``. Two
parameterizations are offered:

* ``ceil_alpha`` (default): ``l = ⌈(n_cal+1)α⌉``, ``a = n_cal+1-l``, ``b = l``.
* ``order_statistic``: ``a = ⌈(1-α)(n_cal+1)⌉``, ``b = n_cal+1-a``. This is
  the exact law for the ``⌈(1-α)(n+1)⌉``-th order statistic used by
  :func:`~task_conformal.conformal.quantile.conformal_quantile`.

The two agree whenever ``(n_cal+1)α`` is an integer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import betaln, gammaln

from ..conformal.quantile import ceil_alpha_rank, conformal_rank
from ..errors import InvalidInputError


class CoverageLaw(str, enum.Enum):
    CEIL_ALPHA = "ceil_alpha"
    ORDER_STATISTIC = "order_statistic"


@dataclass(frozen=True)
class CoverageDistribution:
    n_test: int
    n_cal: int
    alpha: float
    a: int
    b: int
    law: CoverageLaw = CoverageLaw.CEIL_ALPHA

    @property
    def l_cal(self) -> int:
        return self.b

    @property
    def mean(self) -> float:
        """Expected empirical coverage ``a / (a + b)``."""

        return self.a / (self.a + self.b)

    @property
    def variance(self) -> float:
        """Variance of the empirical coverage (count variance over ``n_test²``)."""

        a, b, n = self.a, self.b, self.n_test
        s = a + b
        return a * b * (s + n) / (s * s * (s + 1) * n)

    def pmf(self, k: int) -> float:
        return beta_binomial_pmf(self, k)

    def pmf_table(self) -> np.ndarray:
        """``pmf(k)`` for ``k = 0..n_test``."""

        return np.exp(_log_pmf(self, np.arange(self.n_test + 1)))

    def cdf(self, k: int) -> float:
        if k < 0:
            return 0.0
        if k >= self.n_test:
            return 1.0
        return float(min(1.0, self.pmf_table()[: k + 1].sum()))

    def coverage_quantile(self, q: float) -> float:
        """Smallest coverage level ``k / n_test`` whose cdf reaches ``q``."""

        if not 0.0 <= q <= 1.0:
            raise InvalidInputError(f"quantile level must lie in [0, 1], got {q}")
        cumulative = np.cumsum(self.pmf_table())
        k = int(np.searchsorted(cumulative, q - 1e-12, side="left"))
        return min(k, self.n_test) / self.n_test

    def histogram(self, trials: int) -> np.ndarray:
        """Expected trial counts per coverage level for ``trials`` trials."""

        return self.pmf_table() * trials


def coverage_distribution(
    n_test: int,
    n_cal: int,
    alpha: float,
    law: CoverageLaw | str = CoverageLaw.CEIL_ALPHA,
) -> CoverageDistribution:
    if n_test < 1 or n_cal < 1:
        raise InvalidInputError(
            f"n_test and n_cal must be positive, got {n_test} and {n_cal}"
        )
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    form = CoverageLaw(law)
    if form is CoverageLaw.CEIL_ALPHA:
        b = ceil_alpha_rank(n_cal, alpha)
        a = n_cal + 1 - b
    else:
        a = conformal_rank(n_cal, alpha)
        b = n_cal + 1 - a
    if a < 1 or b < 1:
        raise InvalidInputError(
            f"coverage law is degenerate for n_cal={n_cal}, alpha={alpha} (a={a}, b={b})"
        )
    return CoverageDistribution(n_test, n_cal, float(alpha), a, b, form)


def _log_pmf(dist: CoverageDistribution, k: np.ndarray) -> np.ndarray:
    n = dist.n_test
    log_choose = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return log_choose + betaln(k + dist.a, n - k + dist.b) - betaln(dist.a, dist.b)


def beta_binomial_pmf(dist: CoverageDistribution, k: int) -> float:
    if isinstance(k, bool) or int(k) != k or not 0 <= k <= dist.n_test:
        raise InvalidInputError(f"k must be an integer in 0..{dist.n_test}, got {k}")
    return float(math.exp(_log_pmf(dist, np.asarray(int(k)))))


def sample_coverage(
    dist: CoverageDistribution,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> float | np.ndarray:
    """Draw empirical coverages: ``q ~ Beta(a, b)``, then ``Binomial(n_test, q)``."""

    q = rng.beta(dist.a, dist.b, size=size)
    counts = rng.binomial(dist.n_test, q)
    if size is None:
        return float(counts) / dist.n_test
    return counts / dist.n_test


__all__ = [
    "CoverageDistribution",
    "CoverageLaw",
    "beta_binomial_pmf",
    "coverage_distribution",
    "sample_coverage",
]
