"""Protocol evaluation on a dataset: calibrate per round, run the test volumes.

Samples are grouped into volumes of ``group_size`` consecutive indices, and
calibration/test partitions are drawn over whole volumes. The default
evaluation uses one fixed partition (trial 0); per-trial mode repeats the
evaluation over ``trials`` partitions and reports mean ± standard error.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import DegenerateFoldError, InvalidInputError
from ..models import Method, SampleReduction
from ..seeding import Stream, derived_rng
from ..testbed.sampling import Dataset
from .protocol import (
    MultiRoundOutcome,
    MultiRoundPlan,
    RoundHistogram,
    average_acceleration,
    build_plan,
    group_outcomes,
    round_distribution,
    run_sample,
    volume_max_center_error,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiRoundSummary:
    method: Method
    alpha: float
    tau: float
    n_cal: int
    n_test: int
    qhats: Tuple[float, ...]
    average_acceleration: float
    coverage: float
    coverage_floor: float
    average_max_center_error: Optional[float]
    undefined_center_groups: int
    histogram: RoundHistogram
    degenerate_samples: int
    max_accepted_length: Optional[float]

    @property
    def accepted_within_tau(self) -> bool:
        return self.max_accepted_length is None or self.max_accepted_length < self.tau


@dataclass(frozen=True)
class MultiRoundReport:
    plan: MultiRoundPlan
    outcomes: Tuple[MultiRoundOutcome, ...]
    summary: MultiRoundSummary


@dataclass(frozen=True)
class PerTrialSummary:
    """Mean and standard error of the headline numbers over repeated partitions."""

    trials: int
    average_acceleration: Tuple[float, float]
    coverage: Tuple[float, float]
    average_max_center_error: Tuple[float, float]
    reports: Tuple[MultiRoundSummary, ...]


def volume_split(
    n: int, group_size: int, cal_fraction: float, seed: int, trial: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted ``(calibration, test)`` sample indices, split by whole volumes."""

    if group_size < 1:
        raise InvalidInputError(f"group_size must be at least 1, got {group_size}")
    if not 0.0 < cal_fraction < 1.0:
        raise InvalidInputError(
            f"cal_fraction must lie strictly between 0 and 1, got {cal_fraction}"
        )
    volumes = np.arange(n) // group_size
    n_volumes = int(volumes[-1]) + 1 if n else 0
    n_cal_volumes = int(math.floor(cal_fraction * n_volumes))
    if n_cal_volumes < 1 or n_cal_volumes >= n_volumes:
        raise DegenerateFoldError(
            f"{n_volumes} volumes of size {group_size} cannot be split at "
            f"cal_fraction={cal_fraction}"
        )
    order = derived_rng(seed, Stream.MULTIROUND, trial).permutation(n_volumes)
    cal_mask = np.isin(volumes, order[:n_cal_volumes])
    indices = np.arange(n)
    return indices[cal_mask], indices[~cal_mask]


def summarize_outcomes(
    plan: MultiRoundPlan,
    outcomes: Tuple[MultiRoundOutcome, ...],
    *,
    alpha: float,
    n_cal: int,
) -> MultiRoundSummary:
    n_test = len(outcomes)
    coverage = float(np.mean([o.covered for o in outcomes]))
    floor = 1.0 - alpha - 2.0 * math.sqrt(alpha * (1.0 - alpha) / n_test)

    per_group: List[float] = []
    undefined = 0
    for members in group_outcomes(outcomes):
        if any(o.center_error is None for o in members):
            undefined += 1
            continue
        per_group.extend(volume_max_center_error([members]))

    accepted = [o.final_interval.length for o in outcomes if not o.exhausted]
    return MultiRoundSummary(
        method=plan.method,
        alpha=alpha,
        tau=plan.tau,
        n_cal=n_cal,
        n_test=n_test,
        qhats=tuple(p.qhat for p in plan.predictors),
        average_acceleration=average_acceleration(outcomes, plan.accelerations),
        coverage=coverage,
        coverage_floor=floor,
        average_max_center_error=float(np.mean(per_group)) if per_group else None,
        undefined_center_groups=undefined,
        histogram=round_distribution(outcomes, plan.n_rounds),
        degenerate_samples=sum(1 for o in outcomes if o.degenerate_rounds),
        max_accepted_length=max(accepted) if accepted else None,
    )


def evaluate_protocol(
    dataset: Dataset,
    method: Method | str,
    alpha: float,
    tau: float,
    *,
    cal_fraction: float,
    seed: int,
    group_size: int = 8,
    trial: int = 0,
    reduction: SampleReduction = SampleReduction.FIRST,
    clamp: Optional[Tuple[float, float]] = None,
) -> MultiRoundReport:
    """Calibrate on the calibration volumes and run every test sample."""

    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    cal, test = volume_split(dataset.n, group_size, cal_fraction, seed, trial)
    per_round = [[records[i] for i in cal] for records in dataset.rounds]
    plan = build_plan(
        per_round,
        method,
        alpha,
        tau,
        dataset.accelerations,
        reduction=reduction,
        clamp=clamp,
    )
    outcomes = tuple(
        run_sample(
            plan,
            dataset.per_sample(int(i)),
            dataset.true_output(int(i)),
            sample_index=int(i),
            group_index=int(i) // group_size,
        )
        for i in test
    )
    summary = summarize_outcomes(plan, outcomes, alpha=float(alpha), n_cal=int(cal.size))
    _LOGGER.info(
        "Multi-round %s tau=%g: R_avg=%.3f coverage=%.4f exhausted=%d/%d",
        summary.method.value,
        tau,
        summary.average_acceleration,
        summary.coverage,
        summary.histogram.exhausted,
        summary.n_test,
    )
    return MultiRoundReport(plan=plan, outcomes=outcomes, summary=summary)


def _mean_se(values: List[Optional[float]]) -> Tuple[float, float]:
    kept = np.array([v for v in values if v is not None and math.isfinite(v)])
    if kept.size == 0:
        return math.nan, math.nan
    if kept.size == 1:
        return float(kept[0]), 0.0
    return float(kept.mean()), float(kept.std(ddof=1) / math.sqrt(kept.size))


def evaluate_per_trial(
    dataset: Dataset,
    method: Method | str,
    alpha: float,
    tau: float,
    *,
    trials: int,
    cal_fraction: float,
    seed: int,
    group_size: int = 8,
    workers: int = 1,
    reduction: SampleReduction = SampleReduction.FIRST,
    clamp: Optional[Tuple[float, float]] = None,
) -> PerTrialSummary:
    """Repeat :func:`evaluate_protocol` over ``trials`` random volume partitions."""

    if trials < 1:
        raise InvalidInputError(f"trials must be at least 1, got {trials}")

    def _one(trial: int) -> MultiRoundSummary:
        return evaluate_protocol(
            dataset,
            method,
            alpha,
            tau,
            cal_fraction=cal_fraction,
            seed=seed,
            group_size=group_size,
            trial=trial,
            reduction=reduction,
            clamp=clamp,
        ).summary

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = tuple(pool.map(_one, range(trials)))
    else:
        reports = tuple(_one(t) for t in range(trials))

    return PerTrialSummary(
        trials=trials,
        average_acceleration=_mean_se([r.average_acceleration for r in reports]),
        coverage=_mean_se([r.coverage for r in reports]),
        average_max_center_error=_mean_se(
            [r.average_max_center_error for r in reports]
        ),
        reports=reports,
    )


def outcome_rows(report: MultiRoundReport) -> List[Dict[str, object]]:
    """Per-sample rows: id, group, final round, acceleration, bounds, flags."""

    return [
        {
            "sample": o.sample_index,
            "group": o.group_index,
            "final_round": o.final_round,
            "exhausted": o.exhausted,
            "acceleration": o.acceleration,
            "lower": o.final_interval.lower,
            "upper": o.final_interval.upper,
            "length": o.final_interval.length,
            "true_output": o.true_output,
            "covered": o.covered,
            "center_error": o.center_error,
            "degenerate": bool(o.degenerate_rounds),
        }
        for o in report.outcomes
    ]


__all__ = [
    "MultiRoundReport",
    "MultiRoundSummary",
    "PerTrialSummary",
    "evaluate_per_trial",
    "evaluate_protocol",
    "outcome_rows",
    "summarize_outcomes",
    "volume_split",
]
