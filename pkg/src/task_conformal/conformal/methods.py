"""Per-method adapters and the factory that picks one.

Each interval construction is written as

    [base_low - scale * q̂,  base_high + scale * q̂]

so the scalar path (:mod:`.predictors`) and the vectorised path
(:mod:`.table`) share one definition. A :class:`ConformalMethod` subclass
supplies the score and the ``(base_low, base_high, scale)`` geometry for
one example; :func:`method_for` maps a :class:`~task_conformal.models.Method`
tag to its adapter.

To add a method, subclass :class:`ConformalMethod` and register it in
:data:`METHODS`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from ..errors import MethodMismatchError
from ..models import Interval, Method, SampleReduction
from .scores import (
    ar_score,
    cqr_band,
    cqr_score,
    lwr_score,
    lwr_stats,
    reduce_samples,
    require_spread,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Geometry:
    """Where an interval sits for one example, before ``q̂`` is applied."""

    base_low: float
    base_high: float
    scale: float = 1.0


class ConformalMethod:
    """Base class for a score / interval pair.

    Subclasses set :attr:`method` and implement :meth:`score` and
    :meth:`geometry`.
    """

    method: Method = Method.AR

    def score(
        self,
        task_samples: Sequence[float] | np.ndarray,
        z: float,
        alpha: float,
        reduction: SampleReduction = SampleReduction.FIRST,
    ) -> float:
        raise NotImplementedError

    def geometry(
        self,
        task_samples: Sequence[float] | np.ndarray,
        alpha: float,
        reduction: SampleReduction = SampleReduction.FIRST,
    ) -> Geometry:
        raise NotImplementedError

    def build_interval(self, geometry: Geometry, qhat: float) -> Interval:
        """Apply ``q̂`` to a geometry."""

        lower = geometry.base_low - geometry.scale * qhat
        upper = geometry.base_high + geometry.scale * qhat
        return Interval(lower, upper)


class AbsoluteResidualMethod(ConformalMethod):
    """AR: ``[ẑ - q̂, ẑ + q̂]`` around a point estimate."""

    method = Method.AR

    def score(self, task_samples, z, alpha, reduction=SampleReduction.FIRST):
        return ar_score(reduce_samples(task_samples, reduction), z)

    def geometry(self, task_samples, alpha, reduction=SampleReduction.FIRST):
        z_hat = reduce_samples(task_samples, reduction)
        return Geometry(z_hat, z_hat, 1.0)


class LocallyWeightedMethod(ConformalMethod):
    """LWR: ``[z̄ - σ_z q̂, z̄ + σ_z q̂]``."""

    method = Method.LWR

    def score(self, task_samples, z, alpha, reduction=SampleReduction.FIRST):
        return lwr_score(task_samples, z)

    def geometry(self, task_samples, alpha, reduction=SampleReduction.FIRST):
        stats = require_spread(lwr_stats(task_samples))
        return Geometry(stats.mean, stats.mean, stats.std)


class QuantileRegressionMethod(ConformalMethod):
    """CQR: ``[ẑ(α/2) - q̂, ẑ(1-α/2) + q̂]``; empty when ``q̂`` is negative enough."""

    method = Method.CQR

    def score(self, task_samples, z, alpha, reduction=SampleReduction.FIRST):
        return cqr_score(task_samples, z, alpha)

    def geometry(self, task_samples, alpha, reduction=SampleReduction.FIRST):
        low, high = cqr_band(task_samples, alpha)
        return Geometry(low, high, 1.0)


METHODS: Dict[Method, ConformalMethod] = {
    Method.AR: AbsoluteResidualMethod(),
    Method.LWR: LocallyWeightedMethod(),
    Method.CQR: QuantileRegressionMethod(),
}


def method_for(method: "Method | str") -> ConformalMethod:
    """Return the adapter registered for ``method``."""

    tag = Method.parse(method)
    try:
        adapter = METHODS[tag]
    except KeyError as exc:  # pragma: no cover - every enum member is registered
        raise MethodMismatchError(f"no adapter registered for {tag.value}") from exc
    _LOGGER.debug("Conformal adapter selected: %s", adapter.__class__.__name__)
    return adapter


__all__ = [
    "AbsoluteResidualMethod",
    "ConformalMethod",
    "Geometry",
    "LocallyWeightedMethod",
    "METHODS",
    "QuantileRegressionMethod",
    "method_for",
]
