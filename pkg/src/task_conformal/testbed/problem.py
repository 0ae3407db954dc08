"""Synthetic linear-Gaussian inverse problem with nested measurement rounds.

The model is ``x ~ N(μ0, Σ0)``, ``y = A x + ε`` with ``ε ~ N(0, σ² I)``,
and a soft-classifier task ``z = sigmoid(w·x + b)``. Round ``k`` observes
the first ``round_sizes[k-1]`` rows of ``A``, so the measurement sets are
nested by construction.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from ..errors import InvalidInputError, InvalidSpecError
from ..seeding import Stream, derived_rng

_LOGGER = logging.getLogger(__name__)

# Chosen so that sigmoid(w·x) has a prior standard deviation of about 0.25
# under a standard-normal prior.
DEFAULT_TASK_SCALE = 1.34


@dataclass(frozen=True)
class ProblemSpec:
    """Recipe for :func:`make_problem`.

    ``round_rows`` lists the cumulative number of rows observed after each
    round; the last entry is the total number of available rows.
    """

    dim: int = 16
    round_rows: Tuple[int, ...] = (2, 4, 8, 16)
    noise_std: float = 0.3
    prior_scale: float = 1.0
    task_scale: float = DEFAULT_TASK_SCALE
    task_bias: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "round_rows", tuple(int(r) for r in self.round_rows))
        self.validate()

    def validate(self) -> None:
        if self.dim < 1:
            raise InvalidSpecError(f"dim must be positive, got {self.dim}")
        if len(self.round_rows) < 2:
            raise InvalidSpecError(
                f"at least two measurement rounds are required, got {len(self.round_rows)}"
            )
        if self.round_rows[0] < 1:
            raise InvalidSpecError("every round must observe at least one row")
        for prev, cur in zip(self.round_rows, self.round_rows[1:]):
            if cur <= prev:
                raise InvalidSpecError(
                    f"round row counts must strictly increase, got {list(self.round_rows)}"
                )
        if not self.noise_std > 0:
            raise InvalidSpecError(f"noise_std must be positive, got {self.noise_std}")
        if not self.prior_scale > 0:
            raise InvalidSpecError(
                f"prior_scale must be positive, got {self.prior_scale}"
            )
        if self.task_scale < 0:
            raise InvalidSpecError(
                f"task_scale must be nonnegative, got {self.task_scale}"
            )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["round_rows"] = list(self.round_rows)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProblemSpec":
        try:
            return cls(
                dim=int(data["dim"]),
                round_rows=tuple(int(r) for r in data["round_rows"]),
                noise_std=float(data["noise_std"]),
                prior_scale=float(data.get("prior_scale", 1.0)),
                task_scale=float(data.get("task_scale", DEFAULT_TASK_SCALE)),
                task_bias=float(data.get("task_bias", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(f"invalid problem spec: {exc}") from exc


@dataclass(frozen=True, eq=False)
class MeasurementConfig:
    """The rows observed after one round and the resulting acceleration."""

    rows: np.ndarray
    acceleration: float

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True, eq=False)
class Problem:
    """A frozen problem instance. Arrays must not be mutated by callers."""

    prior_mean: np.ndarray
    prior_cov: np.ndarray
    rows: np.ndarray
    round_sizes: Tuple[int, ...]
    noise_std: float
    task_weights: np.ndarray
    task_bias: float = 0.0
    spec: Optional[ProblemSpec] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        d = int(self.prior_mean.shape[0])
        if self.prior_cov.shape != (d, d):
            raise InvalidSpecError("prior_cov must be d x d")
        if not np.allclose(self.prior_cov, self.prior_cov.T, atol=1e-12):
            raise InvalidSpecError("prior_cov must be symmetric")
        try:
            cholesky(self.prior_cov, lower=True)
        except LinAlgError as exc:
            raise InvalidSpecError("prior_cov must be positive definite") from exc
        if self.rows.ndim != 2 or self.rows.shape[1] != d:
            raise InvalidSpecError("measurement rows must have d columns")
        sizes = tuple(int(s) for s in self.round_sizes)
        if len(sizes) < 2:
            raise InvalidSpecError("at least two measurement rounds are required")
        if sizes[0] < 0 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidSpecError(f"round sizes must strictly increase, got {sizes}")
        if sizes[-1] != self.rows.shape[0]:
            raise InvalidSpecError("the last round must observe every row")
        if self.task_weights.shape != (d,):
            raise InvalidSpecError("task_weights must have length d")
        if not self.noise_std > 0:
            raise InvalidSpecError("noise_std must be positive")
        object.__setattr__(self, "round_sizes", sizes)

    @property
    def dim(self) -> int:
        return int(self.prior_mean.shape[0])

    @property
    def n_rounds(self) -> int:
        return len(self.round_sizes)

    @property
    def total_rows(self) -> int:
        return int(self.rows.shape[0])

    @property
    def accelerations(self) -> List[float]:
        return [self.total_rows / size for size in self.round_sizes]

    @property
    def configs(self) -> List[MeasurementConfig]:
        return [self.config(k) for k in range(1, self.n_rounds + 1)]

    def check_round(self, k: int) -> int:
        if not 1 <= k <= self.n_rounds:
            raise InvalidInputError(
                f"round index must lie in 1..{self.n_rounds}, got {k}"
            )
        return k

    def config(self, k: int) -> MeasurementConfig:
        self.check_round(k)
        size = self.round_sizes[k - 1]
        return MeasurementConfig(rows=self.rows[:size], acceleration=self.total_rows / size)

    def operator(self, k: int) -> np.ndarray:
        """Forward operator of round ``k``; ``k = 0`` means no measurements."""

        if k == 0:
            return self.rows[:0]
        return self.config(k).rows


def build_problem(
    *,
    prior_mean: np.ndarray,
    prior_cov: np.ndarray,
    rows: np.ndarray,
    round_sizes: Tuple[int, ...],
    noise_std: float,
    task_weights: np.ndarray,
    task_bias: float = 0.0,
) -> Problem:
    """Assemble a :class:`Problem` from explicit arrays (copied)."""

    return Problem(
        prior_mean=np.array(prior_mean, dtype=float),
        prior_cov=np.array(prior_cov, dtype=float),
        rows=np.array(rows, dtype=float),
        round_sizes=tuple(round_sizes),
        noise_std=float(noise_std),
        task_weights=np.array(task_weights, dtype=float),
        task_bias=float(task_bias),
    )


def make_problem(spec: ProblemSpec, rng_seed: int) -> Problem:
    """Draw a problem instance; identical for identical ``(spec, rng_seed)``."""

    spec.validate()
    rng = derived_rng(rng_seed, Stream.PROBLEM)
    d = spec.dim
    total = spec.round_rows[-1]
    rows = rng.standard_normal((total, d))
    weights = rng.standard_normal(d)
    norm = float(np.linalg.norm(weights))
    if norm > 0:
        weights = weights * (spec.task_scale / norm)
    problem = Problem(
        prior_mean=np.zeros(d),
        prior_cov=(spec.prior_scale**2) * np.eye(d),
        rows=rows,
        round_sizes=spec.round_rows,
        noise_std=spec.noise_std,
        task_weights=weights,
        task_bias=spec.task_bias,
        spec=spec,
    )
    _LOGGER.debug(
        "Built problem d=%d rounds=%s accelerations=%s",
        d,
        list(spec.round_rows),
        problem.accelerations,
    )
    return problem


__all__ = [
    "DEFAULT_TASK_SCALE",
    "MeasurementConfig",
    "Problem",
    "ProblemSpec",
    "build_problem",
    "make_problem",
]
