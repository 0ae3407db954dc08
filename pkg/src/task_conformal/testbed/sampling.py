"""Ground-truth draws, prefix-wise measurements and per-round datasets."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..errors import InvalidInputError, InvalidSpecError
from ..models import CalibrationRecord
from ..seeding import Stream, derived_rng
from .posterior import round_posterior, stable_cholesky
from .problem import Problem

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Sample:
    """One ground truth with its full noisy measurement vector."""

    truth: np.ndarray
    full_measurement: np.ndarray
    true_output: float
    class_label: int


def logit(problem: Problem, x: np.ndarray) -> np.ndarray | float:
    return np.asarray(x, dtype=float) @ problem.task_weights + problem.task_bias


def task(problem: Problem, x: np.ndarray) -> np.ndarray | float:
    """Soft classifier output ``sigmoid(w·x + b)``.

    ``x`` may be one vector or a ``(p, d)`` stack of vectors.
    """

    values = np.asarray(x, dtype=float)
    if values.shape[-1] != problem.dim:
        raise InvalidInputError(
            f"task input must have {problem.dim} entries, got {values.shape[-1]}"
        )
    out = expit(logit(problem, values))
    return float(out) if np.ndim(out) == 0 else out


def draw_sample(problem: Problem, rng: np.random.Generator) -> Sample:
    """Draw ``x`` from the prior and its noisy response to every row."""

    prior_chol = stable_cholesky(problem.prior_cov, what="prior covariance")
    x = problem.prior_mean + prior_chol @ rng.standard_normal(problem.dim)
    noise = problem.noise_std * rng.standard_normal(problem.total_rows)
    score = float(logit(problem, x))
    return Sample(
        truth=x,
        full_measurement=problem.rows @ x + noise,
        true_output=float(expit(score)),
        class_label=1 if score >= 0.0 else 0,
    )


def measurements_at_round(sample: Sample, problem: Problem, k: int) -> np.ndarray:
    """Responses to the rows observed by round ``k`` (a prefix of the full vector)."""

    problem.check_round(k)
    return sample.full_measurement[: problem.round_sizes[k - 1]].copy()


@dataclass(frozen=True, eq=False)
class Dataset:
    """Per-round calibration records for ``n`` samples.

    ``rounds[k - 1][i]`` is sample ``i`` seen after round ``k``; every round
    shares the same ground truths and noise realizations.
    """

    problem: Problem
    seed: int
    p: int
    rounds: Tuple[Tuple[CalibrationRecord, ...], ...]

    @property
    def n(self) -> int:
        return len(self.rounds[0]) if self.rounds else 0

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def accelerations(self) -> List[float]:
        return self.problem.accelerations

    def round(self, k: int) -> Tuple[CalibrationRecord, ...]:
        self.problem.check_round(k)
        return self.rounds[k - 1]

    def per_sample(self, i: int) -> List[Tuple[float, ...]]:
        """Task samples of sample ``i`` for rounds ``1..C``."""

        return [records[i].task_samples for records in self.rounds]

    def true_output(self, i: int) -> float:
        return self.rounds[0][i].true_output


def _sample_records(
    problem: Problem, p: int, seed: int, index: int
) -> List[CalibrationRecord]:
    rng = derived_rng(seed, Stream.SAMPLES, index)
    sample = draw_sample(problem, rng)
    records: List[CalibrationRecord] = []
    for k in range(1, problem.n_rounds + 1):
        y = measurements_at_round(sample, problem, k)
        recoveries = round_posterior(problem, k).sample(y, p, rng)
        outputs = np.atleast_1d(task(problem, recoveries))
        records.append(
            CalibrationRecord(
                task_samples=tuple(float(v) for v in outputs),
                true_output=sample.true_output,
                class_label=sample.class_label,
            )
        )
    return records


def generate_dataset(
    problem: Problem, n: int, p: int, seed: int, *, workers: int = 1
) -> Dataset:
    """Draw ``n`` samples and their ``p`` task samples at every round.

    Sample ``i`` uses its own stream derived from ``seed``, so the result is
    the same for every ``workers`` value.
    """

    if n < 1:
        raise InvalidSpecError(f"dataset size must be at least 1, got {n}")
    if p < 1:
        raise InvalidSpecError(f"samples per record must be at least 1, got {p}")

    # Warm the per-round operator cache before fanning out.
    for k in range(1, problem.n_rounds + 1):
        round_posterior(problem, k)

    def _one(index: int) -> List[CalibrationRecord]:
        return _sample_records(problem, p, seed, index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_sample = list(pool.map(_one, range(n)))
    else:
        per_sample = [_one(i) for i in range(n)]

    rounds = tuple(
        tuple(records[k] for records in per_sample) for k in range(problem.n_rounds)
    )
    _LOGGER.info(
        "Generated dataset: n=%d p=%d rounds=%d seed=%d", n, p, len(rounds), seed
    )
    return Dataset(problem=problem, seed=int(seed), p=int(p), rounds=rounds)


def dataset_from_records(
    problem: Problem,
    seed: int,
    rounds: Sequence[Sequence[CalibrationRecord]],
) -> Dataset:
    """Wrap externally produced records; all rounds must have the same size."""

    if len(rounds) != problem.n_rounds:
        raise InvalidSpecError(
            f"expected {problem.n_rounds} rounds of records, got {len(rounds)}"
        )
    sizes = {len(r) for r in rounds}
    if len(sizes) != 1 or 0 in sizes:
        raise InvalidSpecError("every round must hold the same nonzero number of records")
    p = rounds[0][0].p
    return Dataset(
        problem=problem,
        seed=int(seed),
        p=p,
        rounds=tuple(tuple(r) for r in rounds),
    )


__all__ = [
    "Dataset",
    "Sample",
    "dataset_from_records",
    "draw_sample",
    "generate_dataset",
    "logit",
    "measurements_at_round",
    "task",
]
