"""Dataset directories: ``problem.json`` plus one ``round_{k}.jsonl`` per round.

Each JSONL line is one record::

    {"round": 1, "sample": 0, "true_output": 0.61, "class_label": 1,
     "task_samples": [0.58, 0.66, ...]}

``problem.json`` holds the problem spec and seed, from which the problem
instance is rebuilt on load, and the resolved run configuration.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from ..errors import DatasetError, InvalidInputError, InvalidSpecError
from ..models import CalibrationRecord
from .problem import ProblemSpec, make_problem
from .sampling import Dataset

_LOGGER = logging.getLogger(__name__)

# Bump when the record or header layout changes.
DATASET_SCHEMA_VERSION = "1.0.0"
PROBLEM_FILE = "problem.json"


def round_file_name(k: int) -> str:
    return f"round_{k}.jsonl"


def save_dataset(
    dataset: Dataset,
    directory: Path,
    *,
    config: Optional[Mapping[str, Any]] = None,
) -> List[Path]:
    """Write ``dataset`` under ``directory`` and return the written paths."""

    spec = dataset.problem.spec
    if spec is None:
        raise InvalidSpecError("only datasets built from a ProblemSpec can be saved")
    directory.mkdir(parents=True, exist_ok=True)
    header: Dict[str, Any] = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "seed": dataset.seed,
        "n": dataset.n,
        "p": dataset.p,
        "problem": spec.to_dict(),
        "accelerations": dataset.accelerations,
        "config": dict(config) if config is not None else None,
    }
    written = [directory / PROBLEM_FILE]
    written[0].write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    for k, records in enumerate(dataset.rounds, start=1):
        path = directory / round_file_name(k)
        lines = [
            json.dumps(
                {
                    "round": k,
                    "sample": i,
                    "true_output": record.true_output,
                    "class_label": record.class_label,
                    "task_samples": list(record.task_samples),
                }
            )
            for i, record in enumerate(records)
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    _LOGGER.info("Wrote dataset with %d rounds to %s", dataset.n_rounds, directory)
    return written


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DatasetError(f"dataset file {path} is missing") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"dataset file {path} is not valid JSON: {exc}") from exc


def _read_round(path: Path, k: int, n: int) -> List[CalibrationRecord]:
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DatasetError(f"round file {path} is missing") from exc
    records: List[CalibrationRecord] = []
    for line_no, line in enumerate(raw_lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            if int(raw["round"]) != k or int(raw["sample"]) != len(records):
                raise DatasetError(
                    f"{path}:{line_no}: expected round {k} sample {len(records)}"
                )
            records.append(
                CalibrationRecord.build(
                    raw["task_samples"], raw["true_output"], raw["class_label"]
                )
            )
        except (ValueError, KeyError, TypeError, InvalidInputError) as exc:
            raise DatasetError(f"{path}:{line_no}: malformed record: {exc}") from exc
    if len(records) != n:
        raise DatasetError(f"{path} holds {len(records)} records, expected {n}")
    return records


def load_dataset(directory: Path) -> Dataset:
    """Read a dataset directory written by :func:`save_dataset`."""

    if not directory.is_dir():
        raise DatasetError(f"dataset directory {directory} does not exist")
    header = _read_json(directory / PROBLEM_FILE)
    try:
        spec = ProblemSpec.from_dict(header["problem"])
        seed = int(header["seed"])
        n = int(header["n"])
        p = int(header["p"])
    except (KeyError, TypeError, ValueError, InvalidSpecError) as exc:
        raise DatasetError(f"{directory / PROBLEM_FILE} has an invalid header: {exc}") from exc
    problem = make_problem(spec, seed)
    rounds = tuple(
        tuple(_read_round(directory / round_file_name(k), k, n))
        for k in range(1, problem.n_rounds + 1)
    )
    _LOGGER.info("Loaded dataset n=%d p=%d from %s", n, p, directory)
    return Dataset(problem=problem, seed=seed, p=p, rounds=rounds)


__all__ = [
    "DATASET_SCHEMA_VERSION",
    "PROBLEM_FILE",
    "load_dataset",
    "round_file_name",
    "save_dataset",
]
