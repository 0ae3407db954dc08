from __future__ import annotations

import math

import numpy as np
import pytest

from task_conformal.errors import DegenerateFoldError, InvalidInputError
from task_conformal.models import CalibrationRecord, Method
from task_conformal.validation.montecarlo import (
    histogram_rows,
    monte_carlo,
    partition,
    split_sizes,
    trial_rows,
)


def _records(n: int, seed: int = 0, p: int = 6) -> list[CalibrationRecord]:
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n):
        centre = float(rng.uniform(0.1, 0.9))
        spread = float(rng.uniform(0.01, 0.1))
        samples = centre + spread * rng.normal(size=p)
        truth = centre + spread * float(rng.normal())
        records.append(CalibrationRecord.build(samples, truth, int(truth >= 0.5)))
    return records


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------


def test_split_sizes_floor() -> None:
    assert split_sizes(600, 0.7) == (420, 180)
    assert split_sizes(10, 0.99) == (9, 1)


@pytest.mark.parametrize("n,fraction", [(10, 0.05), (1, 0.5)])
def test_split_sizes_rejects_empty_fold(n: int, fraction: float) -> None:
    with pytest.raises(DegenerateFoldError):
        split_sizes(n, fraction)


def test_split_sizes_rejects_bad_fraction() -> None:
    with pytest.raises(InvalidInputError):
        split_sizes(10, 1.0)


def test_partition_is_seeded_and_disjoint() -> None:
    cal, test = partition(50, 35, seed=3, trial=7)
    again_cal, _ = partition(50, 35, seed=3, trial=7)
    other_cal, _ = partition(50, 35, seed=3, trial=8)
    assert np.array_equal(cal, again_cal)
    assert not np.array_equal(cal, other_cal)
    assert sorted(np.concatenate([cal, test]).tolist()) == list(range(50))


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("method", list(Method))
def test_mean_coverage_near_target(method: Method) -> None:
    result = monte_carlo(
        _records(200), method, 0.1, trials=300, cal_fraction=0.7, seed=1
    )
    summary = result.summary
    low, high = summary.coverage_band
    tol = 4.0 * summary.coverage_se
    assert low - tol <= summary.mean_coverage <= high + tol
    assert summary.n_cal == 140 and summary.n_test == 60
    assert int(summary.histogram.sum()) == 300
    assert summary.law is not None and summary.exact_law is not None


def test_results_do_not_depend_on_workers() -> None:
    records = _records(80)
    serial = monte_carlo(records, "CQR", 0.2, trials=40, cal_fraction=0.5, seed=2)
    threaded = monte_carlo(
        records, "CQR", 0.2, trials=40, cal_fraction=0.5, seed=2, workers=4
    )
    assert serial.trials == threaded.trials
    assert serial.summary.mean_coverage == threaded.summary.mean_coverage


def test_uncalibratable_trials_give_infinite_length() -> None:
    result = monte_carlo(_records(10), "AR", 0.1, trials=5, cal_fraction=0.5, seed=0)
    summary = result.summary
    assert summary.uncalibratable_trials == 5
    assert summary.mean_coverage == 1.0
    assert summary.mean_length == math.inf
    assert summary.exact_law is None
    rows = histogram_rows(summary)
    assert rows[-1]["count"] == 5
    assert rows[-1]["theoretical_exact"] is None


def test_strata_and_class_summary() -> None:
    result = monte_carlo(_records(100), "LWR", 0.1, trials=20, cal_fraction=0.7, seed=4)
    summary = result.summary
    assert sum(s.total_count for s in summary.strata) == 20 * 30
    assert all(c is None or 0.0 <= c <= 1.0 for c in summary.class_coverage)
    assert summary.var_coverage >= 0.0 and summary.var_se >= 0.0


def test_trial_rows_are_flat() -> None:
    result = monte_carlo(_records(40), "AR", 0.2, trials=3, cal_fraction=0.5, seed=0)
    rows = trial_rows(result)
    assert [row["trial"] for row in rows] == [0, 1, 2]
    assert {"qhat", "covered", "empirical_coverage", "coverage_(0,0.05]", "count_>1"} <= set(
        rows[0]
    )


def test_histogram_rows_carry_theory() -> None:
    result = monte_carlo(_records(60), "AR", 0.1, trials=10, cal_fraction=0.5, seed=0)
    rows = histogram_rows(result.summary)
    assert len(rows) == 31
    assert sum(row["count"] for row in rows) == 10
    assert sum(row["theoretical"] for row in rows) == pytest.approx(10.0)


def test_monte_carlo_rejects_empty_records_and_zero_trials() -> None:
    with pytest.raises(DegenerateFoldError):
        monte_carlo([], "AR", 0.1, trials=5, cal_fraction=0.5, seed=0)
    with pytest.raises(InvalidInputError):
        monte_carlo(_records(10), "AR", 0.1, trials=0, cal_fraction=0.5, seed=0)
