from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import betabinom

from task_conformal.errors import InvalidInputError
from task_conformal.validation.theory import (
    CoverageLaw,
    beta_binomial_pmf,
    coverage_distribution,
    sample_coverage,
)


def test_ceil_alpha_parameters() -> None:
    dist = coverage_distribution(180, 420, 0.1)
    assert dist.law is CoverageLaw.CEIL_ALPHA
    assert (dist.a, dist.b) == (378, 43)
    assert dist.l_cal == 43
    assert dist.mean == pytest.approx(378 / 421)


def test_order_statistic_parameters() -> None:
    dist = coverage_distribution(180, 420, 0.1, "order_statistic")
    assert (dist.a, dist.b) == (379, 42)
    assert dist.mean == pytest.approx(379 / 421)


def test_laws_agree_when_rank_is_integral() -> None:
    first = coverage_distribution(10, 9, 0.1, CoverageLaw.CEIL_ALPHA)
    second = coverage_distribution(10, 9, 0.1, CoverageLaw.ORDER_STATISTIC)
    assert (first.a, first.b) == (second.a, second.b) == (9, 1)


@pytest.mark.parametrize("law", list(CoverageLaw))
def test_pmf_matches_scipy_betabinom(law: CoverageLaw) -> None:
    dist = coverage_distribution(50, 99, 0.1, law)
    reference = betabinom(50, dist.a, dist.b)
    for k in (0, 10, 40, 45, 50):
        assert beta_binomial_pmf(dist, k) == pytest.approx(reference.pmf(k), rel=1e-9)
    assert dist.variance == pytest.approx(reference.var() / 50**2, rel=1e-9)
    assert dist.cdf(44) == pytest.approx(reference.cdf(44), rel=1e-9)


@pytest.mark.parametrize("n_test", [1, 10, 180, 1000, 10000])
def test_pmf_sums_to_one(n_test: int) -> None:
    dist = coverage_distribution(n_test, 420, 0.1)
    assert dist.pmf_table().sum() == pytest.approx(1.0, abs=1e-10)


def test_cdf_bounds_and_coverage_quantile() -> None:
    dist = coverage_distribution(20, 30, 0.2)
    assert dist.cdf(-1) == 0.0
    assert dist.cdf(20) == 1.0
    median = dist.coverage_quantile(0.5)
    assert dist.cdf(int(round(median * 20))) >= 0.5 - 1e-9
    assert dist.cdf(int(round(median * 20)) - 1) < 0.5
    assert dist.coverage_quantile(0.0) == 0.0
    assert dist.coverage_quantile(1.0) <= 1.0


def test_histogram_scales_with_trials() -> None:
    dist = coverage_distribution(12, 30, 0.1)
    assert dist.histogram(2000).sum() == pytest.approx(2000.0)


def test_sample_coverage_matches_mean() -> None:
    dist = coverage_distribution(100, 200, 0.1)
    draws = sample_coverage(dist, np.random.default_rng(0), size=20000)
    assert draws.mean() == pytest.approx(dist.mean, abs=0.002)
    assert draws.var() == pytest.approx(dist.variance, rel=0.1)
    assert isinstance(sample_coverage(dist, np.random.default_rng(1)), float)


@pytest.mark.parametrize(
    "args",
    [(0, 10, 0.1), (10, 0, 0.1), (10, 10, 0.0), (10, 10, 1.0), (10, 5, 0.99)],
)
def test_invalid_laws_rejected(args: tuple) -> None:
    with pytest.raises(InvalidInputError):
        coverage_distribution(*args)


def test_pmf_rejects_out_of_range_k() -> None:
    dist = coverage_distribution(5, 20, 0.1)
    with pytest.raises(InvalidInputError):
        beta_binomial_pmf(dist, 6)
    with pytest.raises(InvalidInputError):
        beta_binomial_pmf(dist, 1.5)
