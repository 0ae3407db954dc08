"""Tests for the synthetic problem, the exact posterior and the grid oracle."""

from __future__ import annotations

import numpy as np
import pytest

from task_conformal.conformal.scores import lwr_stats
from task_conformal.errors import InvalidInputError, InvalidSpecError, NumericalError
from task_conformal.seeding import Stream, derived_rng
from task_conformal.testbed import (
    ProblemSpec,
    build_problem,
    generate_dataset,
    grid_posterior_moments,
    make_problem,
    point_estimate,
    posterior_moments,
    posterior_samples,
    round_posterior,
)
from task_conformal.testbed.posterior import stable_cholesky


def _small_problem(d: int = 2, noise: float = 0.5):
    rng = np.random.default_rng(5)
    return build_problem(
        prior_mean=np.array([0.3, -0.2, 0.1][:d]),
        prior_cov=np.diag([1.0, 0.8, 1.2][:d]) + 0.1,
        rows=rng.normal(size=(3, d)),
        round_sizes=(1, 3),
        noise_std=noise,
        task_weights=np.ones(d),
    )


# ---------------------------------------------------------------------------
# Problem construction
# ---------------------------------------------------------------------------


def test_problem_spec_defaults() -> None:
    spec = ProblemSpec()
    assert spec.dim == 16
    assert spec.round_rows == (2, 4, 8, 16)
    assert ProblemSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dim": 0},
        {"round_rows": (4,)},
        {"round_rows": (4, 4)},
        {"round_rows": (0, 2)},
        {"noise_std": 0.0},
        {"task_scale": -1.0},
    ],
)
def test_problem_spec_rejects_invalid(kwargs: dict) -> None:
    with pytest.raises(InvalidSpecError):
        ProblemSpec(**kwargs)


def test_problem_spec_from_dict_reports_missing_keys() -> None:
    with pytest.raises(InvalidSpecError):
        ProblemSpec.from_dict({"dim": 3})


def test_make_problem_is_deterministic_and_scaled() -> None:
    spec = ProblemSpec(dim=8, round_rows=(2, 4, 8))
    first = make_problem(spec, 3)
    second = make_problem(spec, 3)
    assert np.array_equal(first.rows, second.rows)
    assert np.linalg.norm(first.task_weights) == pytest.approx(spec.task_scale)
    assert first.accelerations == [4.0, 2.0, 1.0]
    assert not np.array_equal(first.rows, make_problem(spec, 4).rows)


def test_rounds_are_nested_prefixes() -> None:
    problem = make_problem(ProblemSpec(dim=4, round_rows=(1, 3, 6)), 0)
    assert np.array_equal(problem.operator(2)[:1], problem.operator(1))
    assert problem.operator(0).shape == (0, 4)
    assert problem.config(3).n_rows == 6
    with pytest.raises(InvalidInputError):
        problem.config(4)


def test_build_problem_rejects_bad_prior() -> None:
    with pytest.raises(InvalidSpecError):
        build_problem(
            prior_mean=np.zeros(2),
            prior_cov=np.array([[1.0, 2.0], [2.0, 1.0]]),
            rows=np.ones((2, 2)),
            round_sizes=(1, 2),
            noise_std=0.1,
            task_weights=np.ones(2),
        )


# ---------------------------------------------------------------------------
# Posterior
# ---------------------------------------------------------------------------


def test_posterior_matches_covariance_form() -> None:
    problem = _small_problem()
    y = np.array([0.4, -0.3, 1.1])
    rows = problem.operator(2)
    s = rows @ problem.prior_cov @ rows.T + problem.noise_std**2 * np.eye(3)
    gain = problem.prior_cov @ rows.T @ np.linalg.inv(s)
    expected_mean = problem.prior_mean + gain @ (y - rows @ problem.prior_mean)
    expected_cov = problem.prior_cov - gain @ rows @ problem.prior_cov

    moments = posterior_moments(problem, y, 2)
    assert moments.mean == pytest.approx(expected_mean, abs=1e-10)
    assert moments.cov == pytest.approx(expected_cov, abs=1e-10)
    assert point_estimate(problem, y, 2) == pytest.approx(expected_mean, abs=1e-10)


def test_round_zero_is_the_prior() -> None:
    problem = _small_problem()
    moments = posterior_moments(problem, np.array([]), 0)
    assert moments.mean == pytest.approx(problem.prior_mean)
    assert moments.cov == pytest.approx(problem.prior_cov)


def test_posterior_covariance_shrinks_across_rounds() -> None:
    problem = make_problem(ProblemSpec(dim=6, round_rows=(2, 4, 6)), 1)
    covs = [round_posterior(problem, k).cov for k in range(4)]
    for before, after in zip(covs, covs[1:]):
        assert np.linalg.eigvalsh(before - after).min() >= -1e-8


def test_noiseless_identity_rows_recover_the_truth() -> None:
    problem = build_problem(
        prior_mean=np.zeros(3),
        prior_cov=np.eye(3),
        rows=np.eye(3),
        round_sizes=(1, 3),
        noise_std=1e-6,
        task_weights=np.ones(3),
    )
    x = np.array([0.8, -1.3, 0.25])
    moments = posterior_moments(problem, problem.rows @ x, 2)
    assert moments.mean == pytest.approx(x, abs=1e-4)
    assert np.abs(moments.cov).max() < 1e-4


def test_average_task_spread_shrinks_in_later_rounds() -> None:
    problem = build_problem(
        prior_mean=np.zeros(2),
        prior_cov=np.eye(2),
        rows=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        round_sizes=(1, 2, 3),
        noise_std=0.3,
        task_weights=np.ones(2),
    )
    dataset = generate_dataset(problem, 2000, 32, seed=4)
    spreads = [
        float(np.mean([lwr_stats(r.task_samples).std for r in dataset.round(k)]))
        for k in (1, 2, 3)
    ]
    assert spreads[0] > spreads[1] > spreads[2]


def test_posterior_rejects_wrong_measurement_count() -> None:
    problem = _small_problem()
    with pytest.raises(InvalidInputError):
        posterior_moments(problem, np.zeros(2), 2)


def test_posterior_samples_have_posterior_moments() -> None:
    problem = _small_problem()
    y = np.array([0.4, -0.3, 1.1])
    draws = posterior_samples(problem, y, 2, 20000, np.random.default_rng(0))
    moments = posterior_moments(problem, y, 2)
    assert draws.shape == (20000, 2)
    assert draws.mean(axis=0) == pytest.approx(moments.mean, abs=0.02)
    assert np.cov(draws.T) == pytest.approx(moments.cov, abs=0.02)


def test_stable_cholesky_retries_then_fails() -> None:
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    factor = stable_cholesky(singular)
    assert factor @ factor.T == pytest.approx(singular, abs=1e-6)
    with pytest.raises(NumericalError) as info:
        stable_cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]), what="test matrix")
    assert info.value.diagnostics["min_eigenvalue"] == pytest.approx(-1.0)


# ---------------------------------------------------------------------------
# Grid oracle
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("d", [1, 2])
def test_grid_oracle_matches_closed_form(d: int) -> None:
    problem = _small_problem(d=d)
    y = np.array([0.2, 0.5, -0.4])
    for k, n_rows in ((1, 1), (2, 3)):
        closed = posterior_moments(problem, y[:n_rows], k)
        grid = grid_posterior_moments(problem, y[:n_rows], k)
        assert grid.mean == pytest.approx(closed.mean, abs=1e-4)
        assert grid.cov == pytest.approx(closed.cov, abs=1e-3)


def test_grid_oracle_rejects_large_dimension() -> None:
    problem = make_problem(ProblemSpec(dim=4, round_rows=(1, 2)), 0)
    with pytest.raises(InvalidInputError):
        grid_posterior_moments(problem, np.zeros(1), 1)


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------


def test_derived_streams_are_reproducible_and_distinct() -> None:
    a = derived_rng(7, Stream.TRIALS, 3).random(4)
    b = derived_rng(7, Stream.TRIALS, 3).random(4)
    c = derived_rng(7, Stream.TRIALS, 4).random(4)
    d = derived_rng(7, Stream.SAMPLES, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
