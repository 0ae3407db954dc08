"""Split conformal calibration and the AR / LWR / CQR interval constructions.

Public surface:

* :func:`conformal_quantile`, :func:`sample_quantile`: order-statistic rules
* :func:`ar_score`, :func:`lwr_stats`, :func:`lwr_score`, :func:`cqr_score`
* :class:`Predictor` with the ``*_calibrate`` / ``*_interval`` operations and
  the :func:`calibrate` / :func:`interval` dispatchers
* :class:`ScoreTable`: vectorised scores for repeated calibration
"""

from .methods import METHODS, ConformalMethod, method_for
from .predictors import (
    Predictor,
    ar_calibrate,
    ar_interval,
    calibrate,
    cqr_calibrate,
    cqr_interval,
    interval,
    lwr_calibrate,
    lwr_interval,
)
from .quantile import conformal_quantile, conformal_rank, sample_quantile
from .scores import LwrStats, ar_score, cqr_score, lwr_score, lwr_stats
from .table import IntervalBatch, ScoreTable, build_score_table

__all__ = [
    "ConformalMethod",
    "IntervalBatch",
    "LwrStats",
    "METHODS",
    "Predictor",
    "ScoreTable",
    "ar_calibrate",
    "ar_interval",
    "ar_score",
    "build_score_table",
    "calibrate",
    "conformal_quantile",
    "conformal_rank",
    "cqr_calibrate",
    "cqr_interval",
    "cqr_score",
    "interval",
    "lwr_calibrate",
    "lwr_interval",
    "lwr_score",
    "lwr_stats",
    "method_for",
    "sample_quantile",
]
