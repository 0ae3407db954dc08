from __future__ import annotations

import math

import numpy as np
import pytest

from task_conformal.acceptance import brute_force_quantile
from task_conformal.conformal.quantile import (
    ceil_alpha_rank,
    conformal_quantile,
    conformal_rank,
    sample_quantile,
    sample_rank,
)
from task_conformal.errors import InvalidInputError


# ---------------------------------------------------------------------------
# Calibration quantile
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "n,alpha,expected",
    [
        (9, 0.1, 9),
        (19, 0.05, 19),
        (4, 0.2, 4),
        (99, 0.1, 90),
        (20, 0.15, 18),
        (1, 0.5, 1),
    ],
)
def test_conformal_rank_uses_exact_ceiling(n: int, alpha: float, expected: int) -> None:
    assert conformal_rank(n, alpha) == expected


@pytest.mark.parametrize(
    "n,alpha,expected",
    [
        # (1 - α)(n + 1) sits 1e-11 above 9: the ceiling is 10
        (9, 0.099999999999, 10),
        # and 1e-11 below 9: the ceiling is 9
        (9, 0.100000000001, 9),
        (19, 0.05, 19),
        (9, 0.3, 7),
    ],
)
def test_conformal_rank_near_integer_products(
    n: int, alpha: float, expected: int
) -> None:
    assert conformal_rank(n, alpha) == expected
    assert brute_force_quantile(list(range(n)), alpha) == (
        expected - 1 if expected <= n else math.inf
    )


def test_conformal_quantile_is_nonincreasing_in_alpha() -> None:
    rng = np.random.default_rng(4)
    alphas = np.round(np.linspace(0.0, 1.0, 101), 2)
    for _ in range(20):
        scores = rng.normal(size=int(rng.integers(1, 40)))
        quantiles = [conformal_quantile(scores, float(a)) for a in alphas]
        assert all(b <= a for a, b in zip(quantiles, quantiles[1:]))


def test_ceil_alpha_rank() -> None:
    assert ceil_alpha_rank(420, 0.1) == 43
    assert ceil_alpha_rank(9, 0.1) == 1


def test_conformal_quantile_picks_kth_smallest() -> None:
    scores = [5.0, 1.0, 4.0, 2.0, 3.0, 9.0, 8.0, 7.0, 6.0]
    assert conformal_quantile(scores, 0.1) == 9.0
    assert conformal_quantile(scores, 0.5) == 5.0


def test_conformal_quantile_infinite_when_rank_exceeds_n() -> None:
    assert conformal_quantile([0.1] * 8, 0.1) == math.inf
    assert conformal_quantile([0.3, 0.2], 0.0) == math.inf


def test_conformal_quantile_alpha_one_is_minus_infinity() -> None:
    assert conformal_quantile([0.3, 0.2], 1.0) == -math.inf


def test_conformal_quantile_with_ties() -> None:
    assert conformal_quantile([1.0, 1.0, 1.0, 2.0], 0.5) == 1.0


@pytest.mark.parametrize("bad", [[], [1.0, math.nan], [math.inf]])
def test_conformal_quantile_rejects_bad_scores(bad: list) -> None:
    with pytest.raises(InvalidInputError):
        conformal_quantile(bad, 0.1)


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_conformal_quantile_rejects_alpha_out_of_range(alpha: float) -> None:
    with pytest.raises(InvalidInputError):
        conformal_quantile([1.0, 2.0], alpha)


def test_conformal_quantile_agrees_with_brute_force() -> None:
    rng = np.random.default_rng(11)
    for case in range(200):
        n = int(rng.integers(1, 30))
        scores = rng.integers(0, 4, n).astype(float).tolist()
        alpha = round(float(rng.uniform(0.01, 0.99)), 2)
        assert conformal_quantile(scores, alpha) == brute_force_quantile(scores, alpha)


# ---------------------------------------------------------------------------
# Sample quantile
# ---------------------------------------------------------------------------


def test_sample_rank_clamps() -> None:
    assert sample_rank(0.0, 10) == 1
    assert sample_rank(1.0, 10) == 10
    assert sample_rank(0.05, 32) == 2
    assert sample_rank(0.95, 32) == 31


def test_sample_rank_near_integer_products() -> None:
    assert sample_rank(0.7, 10) == 7
    assert sample_rank(0.250000000001, 4) == 2
    assert sample_rank(0.249999999999, 4) == 1


def test_sample_quantile_is_nondecreasing_in_omega() -> None:
    rng = np.random.default_rng(6)
    omegas = np.round(np.linspace(0.0, 1.0, 101), 2)
    for _ in range(20):
        values = rng.uniform(size=int(rng.integers(1, 33)))
        quantiles = [sample_quantile(float(w), values) for w in omegas]
        assert all(a <= b for a, b in zip(quantiles, quantiles[1:]))


def test_sample_quantile_returns_an_element() -> None:
    values = [3.0, 1.0, 2.0, 4.0]
    assert sample_quantile(0.5, values) == 2.0
    assert sample_quantile(0.0, values) == 1.0
    assert sample_quantile(1.0, values) == 4.0


def test_sample_quantile_rejects_bad_level() -> None:
    with pytest.raises(InvalidInputError):
        sample_quantile(1.2, [1.0])
    with pytest.raises(InvalidInputError):
        sample_quantile(0.5, [])
