"""Calibrated predictors and the per-method calibrate / interval operations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidInputError, MethodMismatchError
from ..models import CalibrationRecord, Interval, Method, SampleReduction
from .methods import Geometry, method_for
from .quantile import check_alpha, conformal_quantile

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Predictor:
    """A calibrated interval constructor. Immutable once built."""

    method: Method
    alpha: float
    qhat: float
    calibration_size: int
    reduction: SampleReduction = SampleReduction.FIRST

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method.parse(self.method))
        object.__setattr__(self, "reduction", SampleReduction(self.reduction))
        check_alpha(self.alpha)
        if self.calibration_size < 1:
            raise InvalidInputError("calibration_size must be positive")

    @property
    def is_calibratable(self) -> bool:
        """False when the calibration set was too small for ``alpha``."""

        return not math.isinf(self.qhat)


def _check_records(records: Sequence[CalibrationRecord]) -> None:
    if len(records) == 0:
        raise InvalidInputError("calibration requires at least one record")


def _calibrate(
    method: Method,
    records: Sequence[CalibrationRecord],
    alpha: float,
    reduction: SampleReduction,
) -> Predictor:
    _check_records(records)
    adapter = method_for(method)
    scores = np.fromiter(
        (
            adapter.score(r.task_samples, r.true_output, alpha, reduction)
            for r in records
        ),
        dtype=float,
        count=len(records),
    )
    qhat = conformal_quantile(scores, alpha)
    _LOGGER.debug(
        "Calibrated %s on n=%d at alpha=%s: qhat=%r",
        adapter.method.value,
        len(records),
        alpha,
        qhat,
    )
    return Predictor(adapter.method, float(alpha), qhat, len(records), reduction)


def _require(pred: Predictor, method: Method) -> None:
    if pred.method is not method:
        raise MethodMismatchError(
            f"predictor was calibrated for {pred.method.value}, "
            f"not {method.value}"
        )


def ar_calibrate(
    records: Sequence[CalibrationRecord],
    alpha: float,
    reduce: SampleReduction = SampleReduction.FIRST,
) -> Predictor:
    return _calibrate(Method.AR, records, alpha, SampleReduction(reduce))


def ar_interval(pred: Predictor, z_hat: float) -> Interval:
    _require(pred, Method.AR)
    adapter = method_for(Method.AR)
    return adapter.build_interval(Geometry(float(z_hat), float(z_hat)), pred.qhat)


def lwr_calibrate(records: Sequence[CalibrationRecord], alpha: float) -> Predictor:
    return _calibrate(Method.LWR, records, alpha, SampleReduction.FIRST)


def lwr_interval(
    pred: Predictor, task_samples: Sequence[float] | np.ndarray
) -> Interval:
    _require(pred, Method.LWR)
    adapter = method_for(Method.LWR)
    return adapter.build_interval(
        adapter.geometry(task_samples, pred.alpha), pred.qhat
    )


def cqr_calibrate(records: Sequence[CalibrationRecord], alpha: float) -> Predictor:
    return _calibrate(Method.CQR, records, alpha, SampleReduction.FIRST)


def cqr_interval(
    pred: Predictor, task_samples: Sequence[float] | np.ndarray
) -> Interval:
    _require(pred, Method.CQR)
    adapter = method_for(Method.CQR)
    return adapter.build_interval(
        adapter.geometry(task_samples, pred.alpha), pred.qhat
    )


def calibrate(
    method: "Method | str",
    records: Sequence[CalibrationRecord],
    alpha: float,
    *,
    reduction: SampleReduction = SampleReduction.FIRST,
) -> Predictor:
    """Calibrate any of the three methods on ``records``."""

    return _calibrate(Method.parse(method), records, alpha, SampleReduction(reduction))


def interval(
    pred: Predictor,
    task_samples: Sequence[float] | np.ndarray,
    *,
    method: "Method | str | None" = None,
    clamp: Optional[Tuple[float, float]] = None,
) -> Interval:
    """Build the prediction interval for one example.

    ``method``, when given, must match the predictor. ``clamp`` intersects
    the result with a known task-output range.
    """

    if method is not None:
        _require(pred, Method.parse(method))
    adapter = method_for(pred.method)
    result = adapter.build_interval(
        adapter.geometry(task_samples, pred.alpha, pred.reduction), pred.qhat
    )
    if clamp is not None:
        result = result.clamp(*clamp)
    return result


__all__ = [
    "Predictor",
    "ar_calibrate",
    "ar_interval",
    "calibrate",
    "cqr_calibrate",
    "cqr_interval",
    "interval",
    "lwr_calibrate",
    "lwr_interval",
]
