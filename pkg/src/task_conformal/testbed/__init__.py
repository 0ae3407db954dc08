"""Synthetic linear-Gaussian testbed with exact posterior sampling."""

from .dataset_io import load_dataset, save_dataset
from .oracle import grid_posterior_moments
from .posterior import (
    PosteriorMoments,
    point_estimate,
    posterior_moments,
    posterior_samples,
    round_posterior,
)
from .problem import MeasurementConfig, Problem, ProblemSpec, build_problem, make_problem
from .sampling import (
    Dataset,
    Sample,
    draw_sample,
    generate_dataset,
    measurements_at_round,
    task,
)

__all__ = [
    "Dataset",
    "MeasurementConfig",
    "PosteriorMoments",
    "Problem",
    "ProblemSpec",
    "Sample",
    "build_problem",
    "draw_sample",
    "generate_dataset",
    "grid_posterior_moments",
    "load_dataset",
    "make_problem",
    "measurements_at_round",
    "point_estimate",
    "posterior_moments",
    "posterior_samples",
    "round_posterior",
    "save_dataset",
    "task",
]
