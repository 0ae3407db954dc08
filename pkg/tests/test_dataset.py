"""Tests for dataset generation and the dataset directory format."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from task_conformal.errors import DatasetError, InvalidInputError, InvalidSpecError
from task_conformal.seeding import Stream, derived_rng
from task_conformal.testbed import (
    ProblemSpec,
    build_problem,
    draw_sample,
    generate_dataset,
    load_dataset,
    make_problem,
    measurements_at_round,
    save_dataset,
    task,
)
from task_conformal.testbed.dataset_io import PROBLEM_FILE, round_file_name


def _problem():
    return make_problem(ProblemSpec(dim=4, round_rows=(1, 2, 4)), 2)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def test_task_is_a_sigmoid() -> None:
    problem = _problem()
    assert task(problem, np.zeros(4)) == pytest.approx(0.5)
    stack = task(problem, np.zeros((3, 4)))
    assert stack.shape == (3,)
    with pytest.raises(InvalidInputError):
        task(problem, np.zeros(3))


def _scalar_problem(weight: float):
    return build_problem(
        prior_mean=np.zeros(1),
        prior_cov=np.eye(1),
        rows=np.array([[1.0], [2.0]]),
        round_sizes=(1, 2),
        noise_std=0.3,
        task_weights=np.array([weight]),
    )


def test_task_closed_form_values() -> None:
    assert task(_scalar_problem(1.0), np.array([math.log(3.0)])) == pytest.approx(0.75)
    flat = _scalar_problem(0.0)
    for x in (-50.0, 0.0, 2.5, 1e3):
        assert task(flat, np.array([x])) == 0.5


def test_sample_label_matches_output() -> None:
    problem = _problem()
    for index in range(20):
        sample = draw_sample(problem, derived_rng(0, Stream.SAMPLES, index))
        assert 0.0 < sample.true_output < 1.0
        assert sample.class_label == int(sample.true_output >= 0.5)


def test_measurements_are_prefixes() -> None:
    problem = _problem()
    sample = draw_sample(problem, np.random.default_rng(1))
    assert measurements_at_round(sample, problem, 1).shape == (1,)
    assert np.array_equal(
        measurements_at_round(sample, problem, 3)[:2],
        measurements_at_round(sample, problem, 2),
    )


def test_generate_dataset_shapes() -> None:
    dataset = generate_dataset(_problem(), 12, 5, seed=4)
    assert dataset.n == 12
    assert dataset.n_rounds == 3
    assert all(len(r.task_samples) == 5 for r in dataset.round(2))
    assert dataset.true_output(3) == dataset.round(3)[3].true_output
    assert len(dataset.per_sample(0)) == 3


def test_generate_dataset_independent_of_workers() -> None:
    serial = generate_dataset(_problem(), 16, 4, seed=9)
    threaded = generate_dataset(_problem(), 16, 4, seed=9, workers=4)
    assert serial.rounds == threaded.rounds


def test_rounds_share_truths_and_p_sweep_shares_truths() -> None:
    problem = _problem()
    small = generate_dataset(problem, 6, 2, seed=1)
    large = generate_dataset(problem, 6, 16, seed=1)
    for i in range(6):
        outputs = {records[i].true_output for records in small.rounds}
        assert len(outputs) == 1
        assert small.true_output(i) == large.true_output(i)


@pytest.mark.parametrize("n,p", [(0, 4), (4, 0)])
def test_generate_dataset_rejects_empty_sizes(n: int, p: int) -> None:
    with pytest.raises(InvalidSpecError):
        generate_dataset(_problem(), n, p, seed=0)


# ---------------------------------------------------------------------------
# Dataset directories
# ---------------------------------------------------------------------------


def test_dataset_directory_round_trip(tmp_path: Path) -> None:
    dataset = generate_dataset(_problem(), 8, 3, seed=5)
    paths = save_dataset(dataset, tmp_path / "ds", config={"seed": 2})

    assert [p.name for p in paths] == [PROBLEM_FILE] + [round_file_name(k) for k in (1, 2, 3)]
    header = json.loads((tmp_path / "ds" / PROBLEM_FILE).read_text(encoding="utf-8"))
    assert header["n"] == 8 and header["p"] == 3
    assert header["accelerations"] == [4.0, 2.0, 1.0]

    loaded = load_dataset(tmp_path / "ds")
    assert loaded.rounds == dataset.rounds
    assert np.array_equal(loaded.problem.rows, dataset.problem.rows)


def test_load_dataset_missing_directory(tmp_path: Path) -> None:
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "absent")


def test_load_dataset_detects_truncated_round(tmp_path: Path) -> None:
    dataset = generate_dataset(_problem(), 5, 2, seed=5)
    save_dataset(dataset, tmp_path)
    path = tmp_path / round_file_name(2)
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)


def test_load_dataset_detects_corrupt_line(tmp_path: Path) -> None:
    dataset = generate_dataset(_problem(), 3, 2, seed=5)
    save_dataset(dataset, tmp_path)
    (tmp_path / round_file_name(1)).write_text("{not json\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)


@pytest.mark.parametrize(
    "field,value",
    [("round", "x"), ("sample", "first"), ("true_output", "high"), ("round", None)],
)
def test_load_dataset_rejects_unparsable_fields(
    tmp_path: Path, field: str, value: object
) -> None:
    dataset = generate_dataset(_problem(), 3, 2, seed=5)
    save_dataset(dataset, tmp_path)
    path = tmp_path / round_file_name(1)
    lines = path.read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[0])
    record[field] = value
    lines[0] = json.dumps(record)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="malformed record"):
        load_dataset(tmp_path)
