"""Acceptance checks run by the ``validate`` command.

Each check returns a :class:`CheckResult`; statistical tolerances are
derived from the Monte-Carlo standard errors of the run, so fewer trials
widen them automatically.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import shutil
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .commands import (
    build_dataset,
    cmd_generate,
    cmd_montecarlo,
    cmd_multiround,
    dataset_dir,
    p_sweep_rows,
    run_multiround,
)
from .conformal import calibrate, conformal_quantile, interval
from .config_loader import RunConfig
from .errors import TaskConformalError, describe
from .models import Method
from .multiround.evaluation import evaluate_protocol
from .seeding import Stream, derived_rng
from .testbed.oracle import grid_posterior_moments
from .testbed.posterior import posterior_moments, round_posterior
from .testbed.problem import Problem, build_problem, make_problem
from .testbed.sampling import Dataset
from .validation.montecarlo import MonteCarloSummary, monte_carlo
from .validation.theory import CoverageLaw, coverage_distribution

_LOGGER = logging.getLogger(__name__)

QUANTILE_CASES = 1000
ORACLE_INSTANCES = 20
ORACLE_MEAN_TOL = 1e-4
ORACLE_COV_TOL = 1e-3
CLASS_COVERAGE_TOL = 0.05
PMF_SUM_TOL = 1e-10
SE_MULTIPLIER = 4.0
AR_LENGTH_RTOL = 1e-12

MULTIROUND_ALPHA = 0.05
MULTIROUND_SAMPLES = 1000
MULTIROUND_CAL_FRACTION = 0.5
DEFAULT_P_VALUES = (2, 4, 8, 16, 32)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class AcceptanceReport:
    results: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> Tuple[CheckResult, ...]:
        return tuple(r for r in self.results if not r.passed)

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"check": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in self.results
        ]


class _Context:
    """Lazily computed dataset and Monte-Carlo runs shared by the checks."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self._summaries: Dict[Tuple[Method, int], MonteCarloSummary] = {}

    @cached_property
    def dataset(self) -> Dataset:
        return build_dataset(self.config)

    def rounds(self) -> List[int]:
        return sorted(self.config.rounds())

    def summary(self, method: Method, k: int) -> MonteCarloSummary:
        key = (method, k)
        if key not in self._summaries:
            self._summaries[key] = monte_carlo(
                self.dataset.round(k),
                method,
                self.config.conformal.alpha,
                trials=self.config.montecarlo.trials,
                cal_fraction=self.config.montecarlo.cal_fraction,
                seed=self.config.seed,
                round_index=k,
                reduction=self.config.conformal.reduction,
                workers=self.config.montecarlo.workers,
            ).summary
        return self._summaries[key]

    def summaries(self) -> List[MonteCarloSummary]:
        return [
            self.summary(method, k)
            for method in self.config.conformal.methods
            for k in self.rounds()
        ]


def _verdict(failures: List[str], ok: str) -> Tuple[bool, str]:
    if failures:
        return False, "; ".join(failures)
    return True, ok


# ----------------------------------------------------------------------
# Check 1: calibration quantile against a brute-force rank oracle
# ----------------------------------------------------------------------


def brute_force_quantile(scores: Sequence[float], alpha: float) -> float:
    """Smallest score ``q`` with at least ``⌈(1-α)(n+1)⌉`` scores ``<= q``.

    The rank uses exact rational arithmetic on the decimal form of ``alpha``.
    """

    n = len(scores)
    k = math.ceil((1 - Fraction(repr(alpha))) * (n + 1))
    if k > n:
        return math.inf
    if k < 1:
        return -math.inf
    for q in sorted(set(scores)):
        if sum(1 for s in scores if s <= q) >= k:
            return q
    return math.inf


def _random_alpha(rng: np.random.Generator, case: int) -> float:
    kind = case % 3
    if kind == 0:
        return float(rng.integers(1, 20)) / 20
    if kind == 1:
        return round(float(rng.uniform(0.001, 0.999)), 3)
    return round(float(rng.uniform(0.01, 0.99)), 2)


def check_quantile(ctx: _Context) -> Tuple[bool, str]:
    rng = derived_rng(ctx.config.seed, Stream.ACCEPTANCE, 1)
    failures: List[str] = []
    for case in range(QUANTILE_CASES):
        n = int(rng.integers(1, 51))
        if case % 2:
            scores = rng.integers(0, 5, n).astype(float).tolist()
        else:
            scores = rng.normal(size=n).tolist()
        alpha = _random_alpha(rng, case)
        got = conformal_quantile(scores, alpha)
        expected = brute_force_quantile(scores, alpha)
        if got != expected:
            failures.append(f"case {case}: n={n} alpha={alpha} got {got} want {expected}")
            if len(failures) >= 5:
                break
    return _verdict(failures, f"{QUANTILE_CASES} cases agree")


# ----------------------------------------------------------------------
# Checks 2-5, 9: Monte-Carlo coverage, law agreement and length trends
# ----------------------------------------------------------------------


def _tag(s: MonteCarloSummary) -> str:
    return f"{s.method.value} r{s.round_index}"


def check_marginal_coverage(ctx: _Context) -> Tuple[bool, str]:
    failures: List[str] = []
    worst = math.inf
    for s in ctx.summaries():
        low, high = s.coverage_band
        tol = SE_MULTIPLIER * s.coverage_se
        if not low - tol <= s.mean_coverage <= high + tol:
            failures.append(
                f"{_tag(s)}: mean coverage {s.mean_coverage:.4f} outside "
                f"[{low:.4f}, {high:.4f}] ± {tol:.4f}"
            )
        worst = min(worst, s.mean_coverage)
    return _verdict(failures, f"lowest mean coverage {worst:.4f}")


def check_coverage_law(ctx: _Context) -> Tuple[bool, str]:
    failures: List[str] = []
    for s in ctx.summaries():
        law = s.exact_law
        if law is None:
            failures.append(f"{_tag(s)}: no coverage law for this split")
            continue
        if abs(s.mean_coverage - law.mean) > SE_MULTIPLIER * s.coverage_se:
            failures.append(
                f"{_tag(s)}: mean {s.mean_coverage:.5f} vs law {law.mean:.5f}"
            )
        if abs(s.var_coverage - law.variance) > SE_MULTIPLIER * s.var_se:
            failures.append(
                f"{_tag(s)}: variance {s.var_coverage:.3e} vs law {law.variance:.3e}"
            )

    mc = ctx.config.montecarlo
    n_cal = max(1, int(math.floor(mc.cal_fraction * mc.n_samples)))
    for n_test in (1, 10, 180, 1000, 10000):
        for law in CoverageLaw:
            try:
                dist = coverage_distribution(n_test, n_cal, ctx.config.conformal.alpha, law)
            except TaskConformalError:
                continue
            total = float(dist.pmf_table().sum())
            if abs(total - 1.0) > PMF_SUM_TOL:
                failures.append(f"{law.value} n_test={n_test}: pmf sums to {total!r}")
    return _verdict(failures, "empirical mean and variance match the law")


def nonincreasing_within_se(
    label: str, values: Sequence[Tuple[object, float, float]]
) -> List[str]:
    """Flag consecutive means that grow by more than one standard error.

    ``values`` holds ``(key, mean, se)`` in the order that must not grow. The
    allowed increase is the standard error of the difference of the two means.
    """

    failures = []
    for (key_a, mean_a, se_a), (key_b, mean_b, se_b) in zip(values, values[1:]):
        tol = math.hypot(_finite_or_zero(se_a), _finite_or_zero(se_b))
        if not mean_b <= mean_a + tol:
            failures.append(
                f"{label}: {mean_b:.5g} at {key_b} exceeds {mean_a:.5g} at {key_a} "
                f"by more than one standard error ({tol:.3g})"
            )
    return failures


def _finite_or_zero(value: float) -> float:
    return value if math.isfinite(value) else 0.0


def check_length_by_round(ctx: _Context) -> Tuple[bool, str]:
    failures: List[str] = []
    for method in ctx.config.conformal.methods:
        values = []
        for k in ctx.rounds():
            s = ctx.summary(method, k)
            values.append((f"round {k}", s.mean_length, s.length_se))
        failures.extend(nonincreasing_within_se(method.value, values))
    return _verdict(failures, "mean length does not grow with rounds")


def check_length_by_samples(ctx: _Context) -> Tuple[bool, str]:
    p_values = tuple(sorted(ctx.config.montecarlo.p_sweep or DEFAULT_P_VALUES))
    rows = p_sweep_rows(
        ctx.config, ctx.dataset, methods=(Method.LWR, Method.CQR), p_values=p_values
    )
    failures: List[str] = []
    for method in (Method.LWR, Method.CQR):
        values = [
            (f"p={row['p']}", float(row["mean_length"]), float(row["length_se"]))
            for row in rows
            if row["method"] == method.value
        ]
        failures.extend(nonincreasing_within_se(method.value, values))
    return _verdict(failures, f"mean length does not grow over p={list(p_values)}")


def check_class_coverage(ctx: _Context) -> Tuple[bool, str]:
    failures: List[str] = []
    target = 1.0 - ctx.config.conformal.alpha
    for s in ctx.summaries():
        for label, value in enumerate(s.class_coverage):
            if value is not None and abs(value - target) > CLASS_COVERAGE_TOL:
                failures.append(f"{_tag(s)}: class {label} coverage {value:.4f}")
        counted = sum(stratum.total_count for stratum in s.strata)
        if counted != s.trials * s.n_test:
            failures.append(f"{_tag(s)}: strata hold {counted} of {s.trials * s.n_test}")
    return _verdict(failures, f"class coverage within {CLASS_COVERAGE_TOL} of {target:g}")


# ----------------------------------------------------------------------
# Check 6: AR interval length does not depend on the estimate
# ----------------------------------------------------------------------


def check_ar_invariance(ctx: _Context) -> Tuple[bool, str]:
    records = ctx.dataset.round(1)
    n_cal = max(1, int(math.floor(ctx.config.montecarlo.cal_fraction * len(records))))
    pred = calibrate(
        Method.AR,
        records[:n_cal],
        ctx.config.conformal.alpha,
        reduction=ctx.config.conformal.reduction,
    )
    lengths = [interval(pred, r.task_samples).length for r in records]
    failures: List[str] = []
    if math.isfinite(pred.qhat):
        expected = 2.0 * pred.qhat
        off = [
            length
            for length in lengths
            if not math.isclose(
                length, expected, rel_tol=AR_LENGTH_RTOL, abs_tol=AR_LENGTH_RTOL
            )
        ]
        if off:
            failures.append(
                f"{len(off)} AR lengths differ from 2*qhat={expected!r}, "
                f"e.g. {off[0]!r}"
            )
    elif not all(math.isinf(length) for length in lengths):
        failures.append("AR lengths are not all infinite under an infinite qhat")
    histogram = run_multiround(ctx.config, ctx.dataset, Method.AR).summary.histogram
    if not histogram.is_single_atom:
        failures.append(
            f"AR stopping rounds spread over {histogram.counts} + {histogram.exhausted}"
        )
    return _verdict(failures, "one AR length; one AR stopping round")


# ----------------------------------------------------------------------
# Check 7: multi-round protocol soundness
# ----------------------------------------------------------------------


def check_multiround(ctx: _Context) -> Tuple[bool, str]:
    """One fresh calibration/test split of a new dataset, per method."""

    config = ctx.config
    seed = int(derived_rng(config.seed, Stream.ACCEPTANCE, 7).integers(2**31 - 1))
    dataset = build_dataset(config, n=MULTIROUND_SAMPLES, seed=seed)
    failures: List[str] = []
    notes: List[str] = []
    for method in config.conformal.methods:
        summary = evaluate_protocol(
            dataset,
            method,
            MULTIROUND_ALPHA,
            config.multiround.tau,
            cal_fraction=MULTIROUND_CAL_FRACTION,
            seed=seed,
            group_size=config.multiround.group_size,
            reduction=config.conformal.reduction,
            clamp=config.conformal.clamp,
        ).summary
        if not summary.accepted_within_tau:
            failures.append(
                f"{method.value}: accepted length {summary.max_accepted_length!r} "
                f">= tau={config.multiround.tau}"
            )
        coverage, floor = summary.coverage, summary.coverage_floor
        if not coverage >= floor:
            failures.append(
                f"{method.value}: coverage {coverage:.4f} below {floor:.4f} "
                f"(n_test={summary.n_test})"
            )
        notes.append(f"{method.value} coverage {coverage:.4f} (floor {floor:.4f})")
    return _verdict(failures, ", ".join(notes))


# ----------------------------------------------------------------------
# Check 8: posterior against quadrature, and Loewner ordering across rounds
# ----------------------------------------------------------------------


def _random_problem(rng: np.random.Generator, d: int) -> Problem:
    m = int(rng.integers(2, 6))
    a = 0.5 * rng.normal(size=(d, d))
    return build_problem(
        prior_mean=rng.normal(scale=0.5, size=d),
        prior_cov=a @ a.T + 0.5 * np.eye(d),
        rows=rng.normal(size=(m, d)),
        round_sizes=(1, m),
        noise_std=float(rng.uniform(0.3, 1.0)),
        task_weights=rng.normal(size=d),
    )


def check_posterior(ctx: _Context) -> Tuple[bool, str]:
    rng = derived_rng(ctx.config.seed, Stream.ACCEPTANCE, 8)
    failures: List[str] = []
    for instance in range(ORACLE_INSTANCES):
        d = 1 + instance % 3
        problem = _random_problem(rng, d)
        k = int(rng.integers(0, problem.n_rounds + 1))
        x = rng.multivariate_normal(problem.prior_mean, problem.prior_cov)
        rows = problem.operator(k)
        y = rows @ x + problem.noise_std * rng.normal(size=rows.shape[0])
        closed = posterior_moments(problem, y, k)
        grid = grid_posterior_moments(problem, y, k)
        mean_err = float(np.max(np.abs(closed.mean - grid.mean)))
        cov_err = float(np.max(np.abs(closed.cov - grid.cov)))
        if mean_err > ORACLE_MEAN_TOL or cov_err > ORACLE_COV_TOL:
            failures.append(
                f"instance {instance} (d={d}, k={k}): mean err {mean_err:.2e}, "
                f"cov err {cov_err:.2e}"
            )

    problem = make_problem(ctx.config.problem.spec(), ctx.config.seed)
    covs = [round_posterior(problem, k).cov for k in range(problem.n_rounds + 1)]
    for k, (before, after) in enumerate(zip(covs, covs[1:]), start=1):
        lowest = float(np.linalg.eigvalsh(before - after).min())
        if lowest < -1e-8 * max(1.0, float(np.abs(before).max())):
            failures.append(f"round {k} covariance grew (eigenvalue {lowest:.2e})")
    return _verdict(failures, f"{ORACLE_INSTANCES} instances match quadrature")


# ----------------------------------------------------------------------
# Check 10: determinism across worker counts
# ----------------------------------------------------------------------


def _small_config(config: RunConfig, out: Path, workers: int) -> RunConfig:
    rounds = tuple(range(1, min(2, len(config.problem.round_rows)) + 1))
    return dataclasses.replace(
        config,
        montecarlo=dataclasses.replace(
            config.montecarlo,
            n_samples=64,
            trials=25,
            rounds=rounds,
            p_sweep=(2, 4),
            sweep_round=1,
            workers=workers,
        ),
        multiround=dataclasses.replace(config.multiround, per_trial=True, repeats=3),
        output=dataclasses.replace(config.output, out=str(out), dataset=str(out / "dataset")),
    )


def _snapshot(root: Path) -> Dict[str, bytes]:
    return {
        str(path.relative_to(root)): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


def _run_commands(config: RunConfig) -> None:
    cmd_generate(config)
    cmd_montecarlo(config)
    cmd_multiround(config)


def check_determinism(ctx: _Context) -> Tuple[bool, str]:
    snapshots = []
    with tempfile.TemporaryDirectory(prefix="taskconf-") as tmp:
        out = Path(tmp) / "run"
        for workers in (1, 3):
            small = _small_config(ctx.config, out, workers)
            _run_commands(small)
            if not dataset_dir(small).is_dir():
                return False, "generate wrote no dataset directory"
            snapshots.append(_snapshot(out))
            shutil.rmtree(out)
    first, second = snapshots
    if first.keys() != second.keys():
        return False, "worker counts produced different file sets"
    differing = sorted(name for name in first if first[name] != second[name])
    if differing:
        return False, f"files differ between worker counts: {', '.join(differing)}"
    return True, f"{len(first)} files byte-identical for workers 1 and 3"


# ----------------------------------------------------------------------
# Runner
# ----------------------------------------------------------------------


Check = Callable[[_Context], Tuple[bool, str]]

CHECKS: Tuple[Tuple[str, Check], ...] = (
    ("quantile oracle", check_quantile),
    ("marginal coverage", check_marginal_coverage),
    ("coverage law", check_coverage_law),
    ("length by round", check_length_by_round),
    ("length by samples", check_length_by_samples),
    ("AR length invariance", check_ar_invariance),
    ("multi-round soundness", check_multiround),
    ("posterior oracle", check_posterior),
    ("class-conditional coverage", check_class_coverage),
    ("determinism", check_determinism),
)


def run_acceptance(
    config: RunConfig, *, only: Optional[Sequence[int]] = None
) -> AcceptanceReport:
    """Run the checks (all of them, or the numbers in ``only``)."""

    ctx = _Context(config)
    results: List[CheckResult] = []
    for number, (name, check) in enumerate(CHECKS, start=1):
        if only is not None and number not in only:
            continue
        try:
            passed, detail = check(ctx)
        except TaskConformalError as exc:
            passed, detail = False, f"{type(exc).__name__}: {describe(exc)}"
        level = logging.INFO if passed else logging.ERROR
        _LOGGER.log(
            level,
            "Check %d (%s): %s; %s",
            number,
            name,
            "pass" if passed else "FAIL",
            detail,
        )
        results.append(CheckResult(number, name, passed, detail))
    return AcceptanceReport(tuple(results))


__all__ = [
    "AcceptanceReport",
    "CHECKS",
    "CheckResult",
    "brute_force_quantile",
    "nonincreasing_within_se",
    "run_acceptance",
]
