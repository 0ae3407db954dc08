"""Grid-quadrature posterior moments for small problems (``d <= 3``).

The unnormalized log density ``log p(x) + log p(y | x)`` is evaluated on a
tensor grid and normalized numerically, without using the conjugate-update
formulas. The grid starts at ±8 prior standard deviations and is re-centred
on the running mean with a ±8 standard deviation window on each pass.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..errors import InvalidInputError
from .posterior import PosteriorMoments
from .problem import Problem

_LOGGER = logging.getLogger(__name__)

MAX_DIM = 3
_WINDOW = 8.0


def _default_points(d: int) -> int:
    return 201 if d <= 2 else 121


def _log_density(
    problem: Problem, rows: np.ndarray, y: np.ndarray, grid: np.ndarray
) -> np.ndarray:
    centred = grid - problem.prior_mean
    whitened = np.linalg.solve(problem.prior_cov, centred.T).T
    prior_term = np.einsum("ij,ij->i", centred, whitened)
    residual = y[None, :] - grid @ rows.T
    likelihood_term = np.einsum("ij,ij->i", residual, residual) / problem.noise_std**2
    return -0.5 * (prior_term + likelihood_term)


def _grid_moments(
    problem: Problem,
    rows: np.ndarray,
    y: np.ndarray,
    centre: np.ndarray,
    half_width: np.ndarray,
    points: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    axes = [np.linspace(c - h, c + h, points) for c, h in zip(centre, half_width)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    log_p = _log_density(problem, rows, y, grid)
    weights = np.exp(log_p - log_p.max())
    weights /= weights.sum()
    mean = weights @ grid
    centred = grid - mean
    cov = (centred * weights[:, None]).T @ centred
    spacing = 2.0 * half_width / (points - 1)
    return mean, 0.5 * (cov + cov.T), spacing


def grid_posterior_moments(
    problem: Problem,
    y: np.ndarray,
    k: int,
    *,
    points: Optional[int] = None,
    passes: int = 4,
) -> PosteriorMoments:
    """Posterior mean and covariance of round ``k`` by quadrature."""

    d = problem.dim
    if d > MAX_DIM:
        raise InvalidInputError(f"grid oracle supports d <= {MAX_DIM}, got {d}")
    rows = problem.operator(k) if k else problem.rows[:0]
    values = np.asarray(y, dtype=float).ravel()
    if values.size != rows.shape[0]:
        raise InvalidInputError(
            f"expected {rows.shape[0]} measurements, got {values.size}"
        )
    n_points = points or _default_points(d)

    centre = problem.prior_mean.astype(float)
    half_width = _WINDOW * np.sqrt(np.diag(problem.prior_cov))
    mean = centre
    cov = problem.prior_cov
    for _ in range(max(1, passes)):
        mean, cov, spacing = _grid_moments(
            problem, rows, values, centre, half_width, n_points
        )
        centre = mean
        sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        half_width = np.maximum(_WINDOW * sd, 2.0 * spacing)
    _LOGGER.debug("Grid oracle d=%d k=%d points=%d", d, k, n_points)
    return PosteriorMoments(mean=mean, cov=cov)


__all__ = ["MAX_DIM", "grid_posterior_moments"]
