"""Bodies of the ``generate``, ``montecarlo`` and ``multiround`` subcommands.

Each command is a function of the resolved :class:`RunConfig` and returns
the paths it wrote. ``validate`` lives in :mod:`.acceptance`.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .config_loader import ConfigError, RunConfig
from .errors import DatasetError
from .models import Method
from .multiround.evaluation import (
    MultiRoundReport,
    PerTrialSummary,
    evaluate_per_trial,
    evaluate_protocol,
    outcome_rows,
)
from .reporting import write_output
from .testbed.dataset_io import PROBLEM_FILE, load_dataset, save_dataset
from .testbed.problem import Problem, make_problem
from .testbed.sampling import Dataset, generate_dataset
from .validation.montecarlo import (
    MonteCarloResult,
    MonteCarloSummary,
    histogram_rows,
    monte_carlo,
    trial_rows,
)

_LOGGER = logging.getLogger(__name__)


def output_dir(config: RunConfig) -> Path:
    return Path(config.output.out)


def dataset_dir(config: RunConfig) -> Path:
    if config.output.dataset:
        return Path(config.output.dataset)
    return output_dir(config) / "dataset"


def base_meta(config: RunConfig, command: str, **extra: Any) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "command": command,
        "seed": config.seed,
        "alpha": config.conformal.alpha,
        "target_coverage": 1.0 - config.conformal.alpha,
    }
    meta.update(extra)
    meta["config"] = config.to_dict()
    return meta


def build_dataset(
    config: RunConfig,
    *,
    p: Optional[int] = None,
    n: Optional[int] = None,
    problem: Optional[Problem] = None,
    seed: Optional[int] = None,
) -> Dataset:
    """Generate the configured dataset in memory."""

    run_seed = config.seed if seed is None else seed
    instance = problem or make_problem(config.problem.spec(), run_seed)
    return generate_dataset(
        instance,
        config.montecarlo.n_samples if n is None else n,
        config.conformal.samples_p if p is None else p,
        run_seed,
        workers=config.montecarlo.workers,
    )


def obtain_dataset(config: RunConfig) -> Dataset:
    """Load the configured dataset directory, or generate one in memory."""

    if config.output.dataset:
        directory = Path(config.output.dataset)
        if not (directory / PROBLEM_FILE).is_file():
            raise DatasetError(
                f"no dataset at {directory}; run the generate command first"
            )
        return load_dataset(directory)
    _LOGGER.info("No dataset path configured; generating one in memory")
    return build_dataset(config)


def _check_rounds(config: RunConfig, dataset: Dataset) -> List[int]:
    rounds = list(config.rounds())
    bad = [k for k in rounds if not 1 <= k <= dataset.n_rounds]
    if bad:
        raise ConfigError(
            f"rounds {bad} are outside the dataset's 1..{dataset.n_rounds}"
        )
    return rounds


# ----------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------


def cmd_generate(config: RunConfig) -> List[Path]:
    dataset = build_dataset(config)
    return save_dataset(dataset, dataset_dir(config), config=config.to_dict())


# ----------------------------------------------------------------------
# montecarlo
# ----------------------------------------------------------------------


def _run_monte_carlo(
    config: RunConfig, dataset: Dataset, method: Method, k: int
) -> MonteCarloResult:
    return monte_carlo(
        dataset.round(k),
        method,
        config.conformal.alpha,
        trials=config.montecarlo.trials,
        cal_fraction=config.montecarlo.cal_fraction,
        seed=config.seed,
        round_index=k,
        reduction=config.conformal.reduction,
        workers=config.montecarlo.workers,
    )


def summary_row(summary: MonteCarloSummary, acceleration: float) -> Dict[str, Any]:
    low, high = summary.coverage_band
    row: Dict[str, Any] = {
        "method": summary.method.value,
        "round": summary.round_index,
        "acceleration": acceleration,
        "trials": summary.trials,
        "n_cal": summary.n_cal,
        "n_test": summary.n_test,
        "target": summary.target,
        "band_low": low,
        "band_high": high,
        "mean_coverage": summary.mean_coverage,
        "coverage_se": summary.coverage_se,
        "var_coverage": summary.var_coverage,
        "var_se": summary.var_se,
        "law_mean": summary.law.mean if summary.law else None,
        "law_var": summary.law.variance if summary.law else None,
        "exact_law_mean": summary.exact_law.mean if summary.exact_law else None,
        "exact_law_var": summary.exact_law.variance if summary.exact_law else None,
        "mean_length": summary.mean_length,
        "std_length": summary.std_length,
        "length_se": summary.length_se,
        "coverage_class0": summary.class_coverage[0],
        "coverage_class1": summary.class_coverage[1],
        "uncalibratable_trials": summary.uncalibratable_trials,
    }
    for stratum in summary.strata:
        row[f"coverage_{stratum.label()}"] = stratum.mean_coverage
        row[f"count_{stratum.label()}"] = stratum.total_count
    return row


def p_sweep_rows(
    config: RunConfig,
    dataset: Dataset,
    *,
    methods: Optional[Sequence[Method]] = None,
    p_values: Optional[Sequence[int]] = None,
) -> List[Dict[str, Any]]:
    """Mean interval length against the number of task samples ``p``."""

    k = config.montecarlo.sweep_round
    chosen = tuple(methods or config.conformal.methods)
    rows: List[Dict[str, Any]] = []
    for p in p_values or config.montecarlo.p_sweep:
        swept = generate_dataset(
            dataset.problem,
            dataset.n,
            p,
            dataset.seed,
            workers=config.montecarlo.workers,
        )
        for method in chosen:
            summary = _run_monte_carlo(config, swept, method, k).summary
            rows.append(
                {
                    "p": p,
                    "method": method.value,
                    "round": k,
                    "mean_length": summary.mean_length,
                    "std_length": summary.std_length,
                    "length_se": summary.length_se,
                    "mean_coverage": summary.mean_coverage,
                }
            )
    return rows


def cmd_montecarlo(config: RunConfig) -> List[Path]:
    dataset = obtain_dataset(config)
    rounds = _check_rounds(config, dataset)
    out = output_dir(config)
    fmt = config.output.format
    written: List[Path] = []
    summaries: List[Dict[str, Any]] = []
    by_round: List[Dict[str, Any]] = []

    for method in config.conformal.methods:
        for k in rounds:
            result = _run_monte_carlo(config, dataset, method, k)
            summary = result.summary
            acceleration = dataset.accelerations[k - 1]
            meta = base_meta(
                config,
                "montecarlo",
                method=method.value,
                round=k,
                n_samples=dataset.n,
            )
            stem = f"mc_{method.value.lower()}_r{k}"
            written.append(
                write_output(
                    out, f"{stem}_trials", fmt=fmt, meta=meta, rows=trial_rows(result)
                )
            )
            written.append(
                write_output(
                    out,
                    f"{stem}_histogram",
                    fmt=fmt,
                    meta=meta,
                    rows=histogram_rows(summary),
                )
            )
            summaries.append(summary_row(summary, acceleration))
            by_round.append(
                {
                    "method": method.value,
                    "round": k,
                    "acceleration": acceleration,
                    "mean_length": summary.mean_length,
                    "length_se": summary.length_se,
                }
            )

    meta = base_meta(config, "montecarlo", n_samples=dataset.n)
    written.append(
        write_output(out, "mc_summary", fmt=fmt, meta=meta, rows=summaries)
    )
    written.append(
        write_output(out, "mil_by_round", fmt=fmt, meta=meta, rows=by_round)
    )
    if config.montecarlo.p_sweep:
        sweep_meta = base_meta(
            config, "montecarlo", sweep_round=config.montecarlo.sweep_round
        )
        written.append(
            write_output(
                out,
                "p_sweep",
                fmt=fmt,
                meta=sweep_meta,
                rows=p_sweep_rows(config, dataset),
            )
        )
    return written


# ----------------------------------------------------------------------
# multiround
# ----------------------------------------------------------------------


def round_rows(report: MultiRoundReport) -> List[Dict[str, Any]]:
    """Fraction of samples accepted at each round (cumulative as well)."""

    histogram = report.summary.histogram
    rows: List[Dict[str, Any]] = []
    cumulative = 0.0
    pairs = zip(histogram.counts, histogram.fractions)
    for k, (count, fraction) in enumerate(pairs, start=1):
        cumulative += fraction
        rows.append(
            {
                "round": k,
                "acceleration": report.plan.accelerations[k - 1],
                "count": count,
                "fraction": fraction,
                "cumulative_fraction": cumulative,
            }
        )
    rows.append(
        {
            "round": "exhausted",
            "acceleration": report.plan.accelerations[-1],
            "count": histogram.exhausted,
            "fraction": histogram.exhausted_fraction,
            "cumulative_fraction": cumulative + histogram.exhausted_fraction,
        }
    )
    return rows


def multiround_summary_row(
    report: MultiRoundReport, per_trial: Optional[PerTrialSummary]
) -> Dict[str, Any]:
    s = report.summary
    row: Dict[str, Any] = {
        "method": s.method.value,
        "tau": s.tau,
        "n_cal": s.n_cal,
        "n_test": s.n_test,
        "average_acceleration": s.average_acceleration,
        "coverage": s.coverage,
        "coverage_floor": s.coverage_floor,
        "average_max_center_error": s.average_max_center_error,
        "undefined_center_groups": s.undefined_center_groups,
        "exhausted": s.histogram.exhausted,
        "degenerate_samples": s.degenerate_samples,
        "max_accepted_length": s.max_accepted_length,
    }
    for k, qhat in enumerate(s.qhats, start=1):
        row[f"qhat_r{k}"] = qhat
    if per_trial is not None:
        row["trials"] = per_trial.trials
        row["average_acceleration_mean"], row["average_acceleration_se"] = (
            per_trial.average_acceleration
        )
        row["coverage_mean"], row["coverage_se"] = per_trial.coverage
        row["average_max_center_error_mean"], row["average_max_center_error_se"] = (
            per_trial.average_max_center_error
        )
    return row


def run_multiround(
    config: RunConfig,
    dataset: Dataset,
    method: Method,
    *,
    alpha: Optional[float] = None,
) -> MultiRoundReport:
    return evaluate_protocol(
        dataset,
        method,
        config.conformal.alpha if alpha is None else alpha,
        config.multiround.tau,
        cal_fraction=config.montecarlo.cal_fraction,
        seed=config.seed,
        group_size=config.multiround.group_size,
        reduction=config.conformal.reduction,
        clamp=config.conformal.clamp,
    )


def run_multiround_trials(
    config: RunConfig,
    dataset: Dataset,
    method: Method,
    *,
    alpha: Optional[float] = None,
) -> PerTrialSummary:
    return evaluate_per_trial(
        dataset,
        method,
        config.conformal.alpha if alpha is None else alpha,
        config.multiround.tau,
        trials=config.multiround.repeats,
        cal_fraction=config.montecarlo.cal_fraction,
        seed=config.seed,
        group_size=config.multiround.group_size,
        workers=config.montecarlo.workers,
        reduction=config.conformal.reduction,
        clamp=config.conformal.clamp,
    )


def cmd_multiround(config: RunConfig) -> List[Path]:
    dataset = obtain_dataset(config)
    out = output_dir(config)
    fmt = config.output.format
    written: List[Path] = []
    summaries: List[Dict[str, Any]] = []
    for method in config.conformal.methods:
        report = run_multiround(config, dataset, method)
        per_trial = (
            run_multiround_trials(config, dataset, method)
            if config.multiround.per_trial
            else None
        )
        meta = base_meta(
            config, "multiround", method=method.value, tau=config.multiround.tau
        )
        stem = f"mr_{method.value.lower()}"
        for name, rows in (
            ("outcomes", outcome_rows(report)),
            ("rounds", round_rows(report)),
        ):
            written.append(
                write_output(out, f"{stem}_{name}", fmt=fmt, meta=meta, rows=rows)
            )
        summaries.append(multiround_summary_row(report, per_trial))
    meta = base_meta(config, "multiround", tau=config.multiround.tau)
    written.append(
        write_output(out, "mr_summary", fmt=fmt, meta=meta, rows=summaries)
    )
    return written


__all__ = [
    "base_meta",
    "build_dataset",
    "cmd_generate",
    "cmd_montecarlo",
    "cmd_multiround",
    "dataset_dir",
    "obtain_dataset",
    "output_dir",
    "p_sweep_rows",
    "round_rows",
    "run_multiround",
    "run_multiround_trials",
    "summary_row",
]
