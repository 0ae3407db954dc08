"""Staged acquisition: stop at the first round whose interval is narrower than τ."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..conformal.predictors import Predictor, calibrate, interval
from ..conformal.scores import lwr_stats
from ..errors import (
    DegenerateSamplesError,
    InvalidInputError,
    RoundError,
    TaskConformalError,
    UndefinedCenterError,
)
from ..models import CalibrationRecord, Interval, Method, SampleReduction

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiRoundPlan:
    """One calibrated predictor per round plus the width threshold."""

    predictors: Tuple[Predictor, ...]
    tau: float
    accelerations: Tuple[float, ...]
    clamp: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "predictors", tuple(self.predictors))
        object.__setattr__(
            self, "accelerations", tuple(float(a) for a in self.accelerations)
        )
        if len(self.predictors) < 2:
            raise InvalidInputError("a multi-round plan needs at least two rounds")
        if len(self.predictors) != len(self.accelerations):
            raise InvalidInputError(
                f"{len(self.predictors)} predictors but "
                f"{len(self.accelerations)} accelerations"
            )
        if any(b >= a for a, b in zip(self.accelerations, self.accelerations[1:])):
            raise InvalidInputError("accelerations must strictly decrease")
        if not self.tau > 0:
            raise InvalidInputError(f"tau must be positive, got {self.tau}")

    @property
    def n_rounds(self) -> int:
        return len(self.predictors)

    @property
    def method(self) -> Method:
        return self.predictors[0].method


@dataclass(frozen=True)
class MultiRoundOutcome:
    final_round: int
    exhausted: bool
    final_interval: Interval
    true_output: float
    acceleration: float
    lengths: Tuple[float, ...]
    degenerate_rounds: Tuple[int, ...] = ()
    sample_index: int = -1
    group_index: int = -1

    @property
    def covered(self) -> bool:
        return self.final_interval.contains(self.true_output)

    @property
    def center_error(self) -> Optional[float]:
        """``None`` when the final interval is empty or unbounded."""

        try:
            return center_error(self.final_interval, self.true_output)
        except UndefinedCenterError:
            return None


def build_plan(
    per_round_records: Sequence[Sequence[CalibrationRecord]],
    method: Method | str,
    alpha: float,
    tau: float,
    accelerations: Sequence[float],
    *,
    reduction: SampleReduction = SampleReduction.FIRST,
    clamp: Optional[Tuple[float, float]] = None,
) -> MultiRoundPlan:
    """Calibrate each round independently on its own records."""

    predictors = []
    for k, records in enumerate(per_round_records, start=1):
        try:
            predictors.append(calibrate(method, records, alpha, reduction=reduction))
        except TaskConformalError as exc:
            raise RoundError(k, exc) from exc
    return MultiRoundPlan(tuple(predictors), float(tau), tuple(accelerations), clamp)


def _round_interval(
    plan: MultiRoundPlan, k: int, task_samples: Sequence[float]
) -> Tuple[Interval, bool]:
    predictor = plan.predictors[k - 1]
    try:
        return interval(predictor, task_samples, clamp=plan.clamp), False
    except DegenerateSamplesError as exc:
        if predictor.method is not Method.LWR:
            raise RoundError(k, exc) from exc
        centre = lwr_stats(task_samples).mean
        _LOGGER.warning(
            "Round %d: identical task samples; treating LWR interval as [%g, %g]",
            k,
            centre,
            centre,
        )
        return Interval(centre, centre), True
    except TaskConformalError as exc:
        raise RoundError(k, exc) from exc


def run_sample(
    plan: MultiRoundPlan,
    per_round_task_samples: Sequence[Sequence[float]],
    true_output: float,
    *,
    sample_index: int = -1,
    group_index: int = -1,
) -> MultiRoundOutcome:
    """Walk the rounds in order and stop at the first length below ``tau``."""

    if len(per_round_task_samples) != plan.n_rounds:
        raise InvalidInputError(
            f"expected task samples for {plan.n_rounds} rounds, "
            f"got {len(per_round_task_samples)}"
        )
    lengths = []
    degenerate = []
    result = Interval.empty()
    stopped: Optional[int] = None
    for k, samples in enumerate(per_round_task_samples, start=1):
        result, is_degenerate = _round_interval(plan, k, samples)
        lengths.append(result.length)
        if is_degenerate:
            degenerate.append(k)
        if result.length < plan.tau:
            stopped = k
            break
    exhausted = stopped is None
    final_round = plan.n_rounds if stopped is None else stopped
    return MultiRoundOutcome(
        final_round=final_round,
        exhausted=exhausted,
        final_interval=result,
        true_output=float(true_output),
        acceleration=plan.accelerations[final_round - 1],
        lengths=tuple(lengths),
        degenerate_rounds=tuple(degenerate),
        sample_index=sample_index,
        group_index=group_index,
    )


def center_error(iv: Interval, z: float) -> float:
    """Distance from ``z`` to the midpoint of a nonempty bounded interval."""

    if iv.is_empty or not iv.is_bounded:
        raise UndefinedCenterError(
            f"center of {'empty' if iv.is_empty else 'unbounded'} interval "
            f"[{iv.lower}, {iv.upper}] is undefined"
        )
    return abs(z - iv.midpoint())


def average_acceleration(
    outcomes: Sequence[MultiRoundOutcome], accelerations: Sequence[float]
) -> float:
    """Harmonic mean of the acceleration at each outcome's final round."""

    if not outcomes:
        raise InvalidInputError("average acceleration of no outcomes is undefined")
    reciprocals = np.array([1.0 / accelerations[o.final_round - 1] for o in outcomes])
    return float(1.0 / reciprocals.mean())


def group_outcomes(
    outcomes: Sequence[MultiRoundOutcome],
) -> Tuple[Tuple[MultiRoundOutcome, ...], ...]:
    """Group outcomes by ``group_index``, in first-seen order."""

    groups: dict[int, list[MultiRoundOutcome]] = {}
    for outcome in outcomes:
        groups.setdefault(outcome.group_index, []).append(outcome)
    return tuple(tuple(members) for members in groups.values())


def volume_max_center_error(
    groups: Sequence[Sequence[MultiRoundOutcome]],
) -> Tuple[float, ...]:
    """Largest center error in each group."""

    result = []
    for members in groups:
        if not members:
            raise InvalidInputError("volume groups must not be empty")
        result.append(max(center_error(o.final_interval, o.true_output) for o in members))
    return tuple(result)


@dataclass(frozen=True)
class RoundHistogram:
    counts: Tuple[int, ...]
    exhausted: int

    @property
    def total(self) -> int:
        return sum(self.counts) + self.exhausted

    @property
    def fractions(self) -> Tuple[float, ...]:
        return tuple(c / self.total for c in self.counts)

    @property
    def exhausted_fraction(self) -> float:
        return self.exhausted / self.total

    @property
    def is_single_atom(self) -> bool:
        occupied = sum(1 for c in self.counts if c) + (1 if self.exhausted else 0)
        return occupied == 1


def round_distribution(
    outcomes: Sequence[MultiRoundOutcome], n_rounds: Optional[int] = None
) -> RoundHistogram:
    """Final-round counts for rounds ``1..C`` plus an exhausted bin."""

    if not outcomes:
        raise InvalidInputError("round distribution of no outcomes is undefined")
    c = n_rounds or max(o.final_round for o in outcomes)
    counts = [0] * c
    exhausted = 0
    for outcome in outcomes:
        if outcome.exhausted:
            exhausted += 1
        else:
            counts[outcome.final_round - 1] += 1
    return RoundHistogram(tuple(counts), exhausted)


__all__ = [
    "MultiRoundOutcome",
    "MultiRoundPlan",
    "RoundHistogram",
    "average_acceleration",
    "build_plan",
    "center_error",
    "group_outcomes",
    "round_distribution",
    "run_sample",
    "volume_max_center_error",
]
