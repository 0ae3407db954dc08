"""Multi-round acquisition protocol and its evaluation metrics."""

from .evaluation import (
    MultiRoundReport,
    MultiRoundSummary,
    PerTrialSummary,
    evaluate_per_trial,
    evaluate_protocol,
    volume_split,
)
from .protocol import (
    MultiRoundOutcome,
    MultiRoundPlan,
    RoundHistogram,
    average_acceleration,
    build_plan,
    center_error,
    group_outcomes,
    round_distribution,
    run_sample,
    volume_max_center_error,
)

__all__ = [
    "MultiRoundOutcome",
    "MultiRoundPlan",
    "MultiRoundReport",
    "MultiRoundSummary",
    "PerTrialSummary",
    "RoundHistogram",
    "average_acceleration",
    "build_plan",
    "center_error",
    "evaluate_per_trial",
    "evaluate_protocol",
    "group_outcomes",
    "round_distribution",
    "run_sample",
    "volume_max_center_error",
    "volume_split",
]
