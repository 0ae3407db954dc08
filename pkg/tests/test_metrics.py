from __future__ import annotations

import math

import numpy as np
import pytest

from task_conformal.conformal.table import IntervalBatch
from task_conformal.errors import InvalidInputError
from task_conformal.models import Interval
from task_conformal.validation.metrics import (
    bin_indices,
    check_bin_edges,
    class_conditional_coverage,
    empirical_coverage,
    mean_interval_length,
    size_stratified_coverage,
)


def _intervals() -> list[Interval]:
    return [
        Interval(0.0, 0.04),
        Interval(0.1, 0.2),
        Interval(0.3, 0.42),
        Interval(0.0, 0.5),
        Interval(0.0, 2.0),
    ]


def test_empirical_coverage_accepts_lists_and_batches() -> None:
    intervals = _intervals()
    zs = [0.02, 0.25, 0.42, 0.6, 1.0]
    assert empirical_coverage(intervals, zs) == pytest.approx(0.6)
    batch = IntervalBatch.from_intervals(intervals)
    assert empirical_coverage(batch, zs) == pytest.approx(0.6)


def test_empirical_coverage_rejects_mismatch_and_empty() -> None:
    with pytest.raises(InvalidInputError):
        empirical_coverage(_intervals(), [0.1])
    with pytest.raises(InvalidInputError):
        empirical_coverage([], [])


def test_empty_interval_never_covers() -> None:
    assert empirical_coverage([Interval.empty()], [0.0]) == 0.0


def test_mean_interval_length() -> None:
    assert mean_interval_length(_intervals()) == pytest.approx((0.04 + 0.1 + 0.12 + 0.5 + 2.0) / 5)
    assert mean_interval_length([Interval.unbounded(), Interval(0, 1)]) == math.inf


def test_class_conditional_coverage_reports_absent_class() -> None:
    intervals = [Interval(0.0, 0.4), Interval(0.0, 0.4), Interval(0.0, 0.4)]
    result = class_conditional_coverage(intervals, [0.1, 0.3, 0.45], [0, 0, 0])
    assert result.class0 == pytest.approx(2 / 3)
    assert result.class1 is None
    assert (result.count0, result.count1) == (3, 0)


def test_class_conditional_coverage_both_classes() -> None:
    intervals = [Interval(0.4, 0.7)] * 4
    result = class_conditional_coverage(intervals, [0.45, 0.8, 0.6, 0.65], [0, 1, 1, 1])
    assert result.as_tuple() == (1.0, pytest.approx(2 / 3))


# ---------------------------------------------------------------------------
# Size-stratified coverage
# ---------------------------------------------------------------------------


def test_bins_are_right_closed_with_overflow() -> None:
    edges = check_bin_edges((0.0, 0.05, 0.1, 0.15, 0.2, 1.0))
    lengths = np.array([0.0, 0.05, 0.0501, 0.2, 1.0, 1.5])
    assert bin_indices(lengths, edges).tolist() == [0, 0, 1, 3, 4, 5]


def test_size_stratified_coverage() -> None:
    strata = size_stratified_coverage(_intervals(), [0.02, 0.25, 0.42, 0.6, 1.0])
    assert len(strata) == 6
    assert [s.count for s in strata] == [1, 1, 1, 0, 1, 1]
    assert strata[0].coverage == 1.0
    assert strata[1].coverage == 0.0
    assert strata[3].coverage is None
    assert strata[-1].is_overflow
    assert strata[-1].label() == ">1"
    assert strata[0].label() == "(0,0.05]"
    assert sum(s.count for s in strata) == 5


@pytest.mark.parametrize("edges", [(0.1,), (0.0, 0.0, 1.0), (0.0, math.inf)])
def test_bin_edges_validation(edges: tuple) -> None:
    with pytest.raises(InvalidInputError):
        check_bin_edges(edges)
