from __future__ import annotations

import math

import pytest

from task_conformal.errors import (
    EXIT_CONFIG,
    EXIT_INTERNAL,
    EXIT_IO,
    DatasetError,
    DegenerateFoldError,
    DegenerateSamplesError,
    InvalidInputError,
    InvalidSpecError,
    MethodMismatchError,
    NumericalError,
    RoundError,
    describe,
    exit_code_for,
)
from task_conformal.config_loader import ConfigError
from task_conformal.models import CalibrationRecord, Interval, Method


def test_interval_length_and_membership() -> None:
    iv = Interval(0.2, 0.5)
    assert iv.length == pytest.approx(0.3)
    assert iv.contains(0.2) and iv.contains(0.5)
    assert not iv.contains(0.51)
    assert iv.midpoint() == pytest.approx(0.35)


def test_empty_interval() -> None:
    iv = Interval.empty()
    assert iv.is_empty
    assert iv.length == 0.0
    assert not iv.contains(0.0)
    assert Interval(0.6, 0.4).length == 0.0


def test_unbounded_interval() -> None:
    iv = Interval.unbounded()
    assert not iv.is_bounded
    assert iv.length == math.inf
    assert iv.contains(1e300)


@pytest.mark.parametrize(
    "lower,upper",
    [(0.1, 0.3000000000000001), (-0.35, 0.35), (0.7, 0.7), (-1e-17, 1.0)],
)
def test_length_is_derived_from_bounds(lower: float, upper: float) -> None:
    assert Interval(lower, upper).length == upper - lower


def test_clamp_intersects() -> None:
    assert Interval(-0.2, 0.4).clamp(0.0, 1.0).as_tuple() == (0.0, 0.4)
    assert Interval.empty().clamp(0.0, 1.0).is_empty
    with pytest.raises(InvalidInputError):
        Interval(0.0, 1.0).clamp(1.0, 0.0)


def test_method_parse() -> None:
    assert Method.parse("lwr") is Method.LWR
    assert Method.parse(Method.AR) is Method.AR
    with pytest.raises(MethodMismatchError):
        Method.parse("median")


def test_calibration_record_coerces_samples() -> None:
    record = CalibrationRecord([0.1, 0.2], 0.3, 1)
    assert record.task_samples == (0.1, 0.2)
    assert record.p == 2


@pytest.mark.parametrize(
    "samples,truth,label",
    [
        ([], 0.3, 0),
        ([math.nan], 0.3, 0),
        ([0.1], math.inf, 0),
        ([0.1], 0.3, 2),
    ],
)
def test_calibration_record_validation(samples: list, truth: float, label: int) -> None:
    with pytest.raises(InvalidInputError):
        CalibrationRecord.build(samples, truth, label)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "exc,code",
    [
        (ConfigError("bad"), EXIT_CONFIG),
        (InvalidSpecError("bad"), EXIT_CONFIG),
        (DegenerateFoldError("bad"), EXIT_CONFIG),
        (DegenerateSamplesError("zero spread"), EXIT_CONFIG),
        (RoundError(2, DegenerateSamplesError("zero spread")), EXIT_CONFIG),
        (RoundError(3, DatasetError("bad")), EXIT_IO),
        (RoundError(1, InvalidInputError("bad")), EXIT_INTERNAL),
        (DatasetError("bad"), EXIT_IO),
        (FileNotFoundError("x"), EXIT_IO),
        (InvalidInputError("bad"), EXIT_INTERNAL),
        (RuntimeError("bad"), EXIT_INTERNAL),
    ],
)
def test_exit_code_for(exc: BaseException, code: int) -> None:
    assert exit_code_for(exc) == code


def test_numerical_error_carries_diagnostics() -> None:
    exc = NumericalError("Cholesky failed", diagnostics={"jitter": 1e-12, "shape": (2, 2)})
    text = str(exc)
    assert text.startswith("Cholesky failed")
    assert "jitter=1e-12" in text
    assert "shape=(2, 2)" in text


def test_round_error_tags_round() -> None:
    cause = ValueError("boom")
    exc = RoundError(3, cause)
    assert exc.round_index == 3
    assert exc.cause is cause
    assert str(exc) == "round 3: boom"


def test_describe_falls_back_to_class_name() -> None:
    assert describe(DatasetError("")) == "DatasetError"
    assert describe(DatasetError("missing")) == "missing"
