"""Coverage metrics, the Beta-Binomial coverage law and the Monte-Carlo runner."""

from .metrics import (
    DEFAULT_BIN_EDGES,
    ClassCoverage,
    StratumCoverage,
    class_conditional_coverage,
    empirical_coverage,
    mean_interval_length,
    size_stratified_coverage,
)
from .montecarlo import (
    MonteCarloResult,
    MonteCarloSummary,
    TrialMetrics,
    monte_carlo,
    monte_carlo_table,
)
from .theory import (
    CoverageDistribution,
    CoverageLaw,
    beta_binomial_pmf,
    coverage_distribution,
    sample_coverage,
)

__all__ = [
    "ClassCoverage",
    "CoverageDistribution",
    "CoverageLaw",
    "DEFAULT_BIN_EDGES",
    "MonteCarloResult",
    "MonteCarloSummary",
    "StratumCoverage",
    "TrialMetrics",
    "beta_binomial_pmf",
    "class_conditional_coverage",
    "coverage_distribution",
    "empirical_coverage",
    "mean_interval_length",
    "monte_carlo",
    "monte_carlo_table",
    "sample_coverage",
    "size_stratified_coverage",
]
