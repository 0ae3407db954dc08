"""Exact Gaussian posterior of the testbed, in precision form.

For round ``k`` with operator ``A`` (the first ``round_sizes[k-1]`` rows)::

    Σ_post = (Σ0⁻¹ + AᵀA / σ²)⁻¹
    μ_post = Σ_post (Σ0⁻¹ μ0 + Aᵀ y / σ²)

Neither the gain ``Σ_post Aᵀ / σ²`` nor ``Σ_post`` depends on ``y``, so both
are computed once per (problem, round) and cached in a :class:`RoundPosterior`.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky

from ..errors import InvalidInputError, NumericalError
from .problem import Problem

_LOGGER = logging.getLogger(__name__)

_JITTER = 1e-12


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def stable_cholesky(matrix: np.ndarray, *, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor of the symmetrized ``matrix``.

    Retries once with a ``1e-12`` diagonal jitter; a second failure raises
    :class:`NumericalError` carrying the spectrum diagnostics.
    """

    sym = symmetrize(np.asarray(matrix, dtype=float))
    try:
        return cholesky(sym, lower=True)
    except LinAlgError:
        _LOGGER.warning(
            "Cholesky of %s failed; retrying with jitter %g", what, _JITTER
        )
    try:
        return cholesky(sym + _JITTER * np.eye(sym.shape[0]), lower=True)
    except LinAlgError as exc:
        eigenvalues = np.linalg.eigvalsh(sym)
        raise NumericalError(
            f"Cholesky factorization of {what} failed",
            diagnostics={
                "shape": sym.shape,
                "jitter": _JITTER,
                "min_eigenvalue": float(eigenvalues.min()),
                "max_eigenvalue": float(eigenvalues.max()),
            },
        ) from exc


@dataclass(frozen=True, eq=False)
class PosteriorMoments:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True, eq=False)
class RoundPosterior:
    """The ``y``-independent part of the round-``k`` posterior."""

    round_index: int
    offset: np.ndarray
    gain: np.ndarray
    cov: np.ndarray
    chol: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.gain.shape[1])

    def mean(self, y: np.ndarray) -> np.ndarray:
        values = np.asarray(y, dtype=float).ravel()
        if values.size != self.n_rows:
            raise InvalidInputError(
                f"round {self.round_index} expects {self.n_rows} measurements, "
                f"got {values.size}"
            )
        return self.offset + self.gain @ values

    def moments(self, y: np.ndarray) -> PosteriorMoments:
        return PosteriorMoments(mean=self.mean(y), cov=self.cov.copy())

    def sample(self, y: np.ndarray, p: int, rng: np.random.Generator) -> np.ndarray:
        """``p`` draws ``μ_post + L v`` as the rows of a ``(p, d)`` array."""

        if p < 1:
            raise InvalidInputError(f"p must be at least 1, got {p}")
        mu = self.mean(y)
        v = rng.standard_normal((p, mu.size))
        return mu + v @ self.chol.T


@functools.lru_cache(maxsize=128)
def round_posterior(problem: Problem, k: int) -> RoundPosterior:
    """Posterior operator for round ``k``; ``k = 0`` gives the prior."""

    if k != 0:
        problem.check_round(k)
    d = problem.dim
    identity = np.eye(d)
    if k == 0:
        cov = symmetrize(problem.prior_cov.copy())
        return RoundPosterior(
            round_index=0,
            offset=problem.prior_mean.copy(),
            gain=np.zeros((d, 0)),
            cov=cov,
            chol=stable_cholesky(cov, what="prior covariance"),
        )

    rows = problem.operator(k)
    noise_var = problem.noise_std**2
    prior_factor = (stable_cholesky(problem.prior_cov, what="prior covariance"), True)
    prior_precision = symmetrize(cho_solve(prior_factor, identity))
    precision = prior_precision + rows.T @ rows / noise_var
    factor = (stable_cholesky(precision, what=f"round-{k} precision"), True)
    cov = symmetrize(cho_solve(factor, identity))
    posterior = RoundPosterior(
        round_index=k,
        offset=cho_solve(factor, prior_precision @ problem.prior_mean),
        gain=cho_solve(factor, rows.T) / noise_var,
        cov=cov,
        chol=stable_cholesky(cov, what=f"round-{k} posterior covariance"),
    )
    _LOGGER.debug(
        "Round %d posterior: rows=%d trace(cov)=%.6g", k, rows.shape[0], np.trace(cov)
    )
    return posterior


def posterior_moments(problem: Problem, y: np.ndarray, k: int) -> PosteriorMoments:
    return round_posterior(problem, k).moments(y)


def posterior_samples(
    problem: Problem, y: np.ndarray, k: int, p: int, rng: np.random.Generator
) -> np.ndarray:
    return round_posterior(problem, k).sample(y, p, rng)


def point_estimate(problem: Problem, y: np.ndarray, k: int) -> np.ndarray:
    """The posterior mean, used as the single-recovery estimate."""

    return round_posterior(problem, k).mean(y)


__all__ = [
    "PosteriorMoments",
    "RoundPosterior",
    "point_estimate",
    "posterior_moments",
    "posterior_samples",
    "round_posterior",
    "stable_cholesky",
    "symmetrize",
]
