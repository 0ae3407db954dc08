"""Monte-Carlo coverage validation over random calibration/test partitions.

Trial ``t`` shuffles the records with its own derived stream, calibrates on
the first ``⌊cal_fraction · n⌋`` of them and evaluates on the rest. Trials
are independent, so a thread pool may run them in any order; results are
collected by trial index.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..conformal.table import ScoreTable, build_score_table
from ..errors import DegenerateFoldError, InvalidInputError
from ..models import CalibrationRecord, Method, SampleReduction
from ..seeding import Stream, derived_rng
from .metrics import (
    DEFAULT_BIN_EDGES,
    ClassCoverage,
    StratumCoverage,
    check_bin_edges,
    class_conditional_coverage,
    coverage_mask,
    mean_interval_length,
    size_stratified_coverage,
)
from .theory import CoverageDistribution, CoverageLaw, coverage_distribution

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialMetrics:
    trial: int
    qhat: float
    covered: int
    n_test: int
    empirical_coverage: float
    mean_interval_length: float
    class_coverage: ClassCoverage
    strata: Tuple[StratumCoverage, ...]


@dataclass(frozen=True)
class StratumSummary:
    lower: float
    upper: float
    mean_coverage: Optional[float]
    total_count: int

    def label(self) -> str:
        if math.isinf(self.upper):
            return f">{self.lower:g}"
        return f"({self.lower:g},{self.upper:g}]"


@dataclass(frozen=True)
class MonteCarloSummary:
    method: Method
    alpha: float
    trials: int
    n_cal: int
    n_test: int
    round_index: Optional[int]
    mean_coverage: float
    std_coverage: float
    coverage_se: float
    var_coverage: float
    var_se: float
    mean_length: float
    std_length: float
    length_se: float
    uncalibratable_trials: int
    class_coverage: Tuple[Optional[float], Optional[float]]
    strata: Tuple[StratumSummary, ...]
    histogram: np.ndarray = field(compare=False, repr=False)
    law: Optional[CoverageDistribution] = field(compare=False)
    exact_law: Optional[CoverageDistribution] = field(compare=False)

    @property
    def target(self) -> float:
        return 1.0 - self.alpha

    @property
    def coverage_band(self) -> Tuple[float, float]:
        """Where the mean coverage must land: ``[1-α, 1-α + 1/(n_cal+1)]``."""

        return (self.target, self.target + 1.0 / (self.n_cal + 1))


@dataclass(frozen=True)
class MonteCarloResult:
    trials: Tuple[TrialMetrics, ...]
    summary: MonteCarloSummary


def split_sizes(n: int, cal_fraction: float) -> Tuple[int, int]:
    if not 0.0 < cal_fraction < 1.0:
        raise InvalidInputError(
            f"cal_fraction must lie strictly between 0 and 1, got {cal_fraction}"
        )
    n_cal = int(math.floor(cal_fraction * n))
    n_test = n - n_cal
    if n_cal < 1 or n_test < 1:
        raise DegenerateFoldError(
            f"splitting {n} records at cal_fraction={cal_fraction} leaves an empty "
            f"fold (n_cal={n_cal}, n_test={n_test})"
        )
    return n_cal, n_test


def partition(
    n: int, n_cal: int, seed: int, trial: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle split into ``(calibration, test)`` index arrays."""

    order = derived_rng(seed, Stream.TRIALS, trial).permutation(n)
    return order[:n_cal], order[n_cal:]


def run_trial(
    table: ScoreTable,
    trial: int,
    n_cal: int,
    seed: int,
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
) -> TrialMetrics:
    cal, test = partition(len(table), n_cal, seed, trial)
    predictor = table.calibrate(cal)
    batch = table.intervals(predictor.qhat, test)
    zs = table.true_output[test]
    covered = coverage_mask(batch, zs)
    metrics = TrialMetrics(
        trial=trial,
        qhat=predictor.qhat,
        covered=int(covered.sum()),
        n_test=int(test.size),
        empirical_coverage=float(covered.mean()),
        mean_interval_length=mean_interval_length(batch),
        class_coverage=class_conditional_coverage(
            batch, zs, table.class_label[test]
        ),
        strata=tuple(size_stratified_coverage(batch, zs, bin_edges)),
    )
    _LOGGER.debug(
        "Trial %d: qhat=%r EC=%.4f MIL=%.5g",
        trial,
        metrics.qhat,
        metrics.empirical_coverage,
        metrics.mean_interval_length,
    )
    return metrics


def _mean_std_se(values: np.ndarray) -> Tuple[float, float, float]:
    if np.isinf(values).any():
        return math.inf, math.nan, math.nan
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, std, std / math.sqrt(values.size)


def _variance_se(values: np.ndarray) -> Tuple[float, float]:
    """Sample variance and its standard error from the fourth central moment."""

    if values.size < 2:
        return 0.0, 0.0
    centred = values - values.mean()
    variance = float(values.var(ddof=1))
    m4 = float(np.mean(centred**4))
    m2 = float(np.mean(centred**2))
    return variance, math.sqrt(max(m4 - m2 * m2, 0.0) / values.size)


def _mean_present(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def _law_or_none(
    n_test: int, n_cal: int, alpha: float, law: CoverageLaw | str
) -> Optional[CoverageDistribution]:
    try:
        return coverage_distribution(n_test, n_cal, alpha, law)
    except InvalidInputError as exc:
        _LOGGER.debug("No coverage law for this split: %s", exc)
        return None


def summarize(
    trials: Sequence[TrialMetrics],
    *,
    method: Method,
    alpha: float,
    n_cal: int,
    n_test: int,
    round_index: Optional[int] = None,
    law: CoverageLaw | str = CoverageLaw.CEIL_ALPHA,
) -> MonteCarloSummary:
    if not trials:
        raise InvalidInputError("cannot summarize zero trials")
    coverages = np.array([t.empirical_coverage for t in trials])
    lengths = np.array([t.mean_interval_length for t in trials])
    mean_cov, std_cov, se_cov = _mean_std_se(coverages)
    var_cov, var_se = _variance_se(coverages)
    mean_len, std_len, se_len = _mean_std_se(lengths)

    histogram = np.zeros(n_test + 1, dtype=int)
    for t in trials:
        histogram[t.covered] += 1

    strata: List[StratumSummary] = []
    for index, first in enumerate(trials[0].strata):
        column = [t.strata[index] for t in trials]
        strata.append(
            StratumSummary(
                lower=first.lower,
                upper=first.upper,
                mean_coverage=_mean_present([s.coverage for s in column]),
                total_count=sum(s.count for s in column),
            )
        )

    return MonteCarloSummary(
        method=method,
        alpha=alpha,
        trials=len(trials),
        n_cal=n_cal,
        n_test=n_test,
        round_index=round_index,
        mean_coverage=mean_cov,
        std_coverage=std_cov,
        coverage_se=se_cov,
        var_coverage=var_cov,
        var_se=var_se,
        mean_length=mean_len,
        std_length=std_len,
        length_se=se_len,
        uncalibratable_trials=sum(1 for t in trials if math.isinf(t.qhat)),
        class_coverage=(
            _mean_present([t.class_coverage.class0 for t in trials]),
            _mean_present([t.class_coverage.class1 for t in trials]),
        ),
        strata=tuple(strata),
        histogram=histogram,
        law=_law_or_none(n_test, n_cal, alpha, law),
        exact_law=_law_or_none(n_test, n_cal, alpha, CoverageLaw.ORDER_STATISTIC),
    )


def monte_carlo_table(
    table: ScoreTable,
    *,
    trials: int,
    cal_fraction: float,
    seed: int,
    round_index: Optional[int] = None,
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
    workers: int = 1,
    law: CoverageLaw | str = CoverageLaw.CEIL_ALPHA,
) -> MonteCarloResult:
    """Run ``trials`` partitions over a prepared score table."""

    if trials < 1:
        raise InvalidInputError(f"trials must be at least 1, got {trials}")
    edges = tuple(check_bin_edges(bin_edges).tolist())
    n_cal, n_test = split_sizes(len(table), cal_fraction)

    def _one(trial: int) -> TrialMetrics:
        return run_trial(table, trial, n_cal, seed, edges)

    if workers > 1:
        _LOGGER.debug("Running %d trials on %d workers", trials, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = tuple(pool.map(_one, range(trials)))
    else:
        results = tuple(_one(t) for t in range(trials))

    summary = summarize(
        results,
        method=table.method,
        alpha=table.alpha,
        n_cal=n_cal,
        n_test=n_test,
        round_index=round_index,
        law=law,
    )
    _LOGGER.info(
        "Monte Carlo %s round=%s: T=%d mean EC=%.4f (target %.4f) MIL=%.5g",
        table.method.value,
        round_index if round_index is not None else "-",
        trials,
        summary.mean_coverage,
        summary.target,
        summary.mean_length,
    )
    return MonteCarloResult(trials=results, summary=summary)


def monte_carlo(
    records: Sequence[CalibrationRecord],
    method: Method | str,
    alpha: float,
    *,
    trials: int,
    cal_fraction: float,
    seed: int,
    round_index: Optional[int] = None,
    reduction: SampleReduction = SampleReduction.FIRST,
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
    workers: int = 1,
    law: CoverageLaw | str = CoverageLaw.CEIL_ALPHA,
) -> MonteCarloResult:
    """Coverage validation of one method on one round's records."""

    if len(records) == 0:
        raise DegenerateFoldError("no records to partition")
    split_sizes(len(records), cal_fraction)
    table = build_score_table(records, method, alpha, reduction=reduction)
    return monte_carlo_table(
        table,
        trials=trials,
        cal_fraction=cal_fraction,
        seed=seed,
        round_index=round_index,
        bin_edges=bin_edges,
        workers=workers,
        law=law,
    )


def trial_rows(result: MonteCarloResult) -> List[Dict[str, object]]:
    """Flat per-trial rows for the table / JSON writers."""

    rows: List[Dict[str, object]] = []
    for t in result.trials:
        row: Dict[str, object] = {
            "trial": t.trial,
            "qhat": t.qhat,
            "covered": t.covered,
            "n_test": t.n_test,
            "empirical_coverage": t.empirical_coverage,
            "mean_interval_length": t.mean_interval_length,
            "coverage_class0": t.class_coverage.class0,
            "coverage_class1": t.class_coverage.class1,
        }
        for stratum in t.strata:
            row[f"coverage_{stratum.label()}"] = stratum.coverage
            row[f"count_{stratum.label()}"] = stratum.count
        rows.append(row)
    return rows


def histogram_rows(summary: MonteCarloSummary) -> List[Dict[str, object]]:
    """``(coverage, count, theoretical, theoretical_exact)`` per support point."""

    theory = summary.law.histogram(summary.trials) if summary.law else None
    exact = (
        summary.exact_law.histogram(summary.trials) if summary.exact_law else None
    )
    return [
        {
            "covered": k,
            "coverage": k / summary.n_test,
            "count": int(summary.histogram[k]),
            "theoretical": float(theory[k]) if theory is not None else None,
            "theoretical_exact": float(exact[k]) if exact is not None else None,
        }
        for k in range(summary.n_test + 1)
    ]


__all__ = [
    "MonteCarloResult",
    "MonteCarloSummary",
    "StratumSummary",
    "TrialMetrics",
    "histogram_rows",
    "monte_carlo",
    "monte_carlo_table",
    "partition",
    "run_trial",
    "split_sizes",
    "summarize",
    "trial_rows",
]
