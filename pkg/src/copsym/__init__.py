"""copsym: exchange-symmetry tests for bivariate copulas.

Bernstein-polynomial smoothing of the empirical copula, three rank test
statistics, a multiplier bootstrap for p-values, and a Monte Carlo study
harness with a CLI front end.
"""

from .bootstrap import (
    MultiplierDraw,
    ReplicateSet,
    TestResult,
    bbar_process,
    draw_multipliers,
    replicate_process,
    replicate_statistics,
    run_test,
    run_test_empirical,
)
from .errors import ConfigError, DataError, NetworkError
from .estimators import (
    BernsteinCopula,
    EmpiricalCopula,
    PseudoSample,
    Sample,
    bernstein_copula,
    bernstein_partial_u,
    bernstein_partial_v,
    bernstein_pmf,
    default_order,
    empirical_copula,
    pseudo_observations,
)
from .models import (
    CopulaSpec,
    Family,
    copula_cdf,
    parse_spec_token,
    sample_copula,
    tau_to_param,
)
from .symmetry import (
    GridSpec,
    StatisticTriple,
    stat_r,
    stat_r_empirical,
    stat_s,
    stat_s_empirical,
    stat_t,
    stat_t_empirical,
    symmetry_statistics,
    symmetry_statistics_empirical,
)

__version__ = "0.1.0"

__all__ = [
    "BernsteinCopula",
    "ConfigError",
    "CopulaSpec",
    "DataError",
    "EmpiricalCopula",
    "Family",
    "GridSpec",
    "MultiplierDraw",
    "NetworkError",
    "PseudoSample",
    "ReplicateSet",
    "Sample",
    "StatisticTriple",
    "TestResult",
    "bbar_process",
    "bernstein_copula",
    "bernstein_partial_u",
    "bernstein_partial_v",
    "bernstein_pmf",
    "copula_cdf",
    "default_order",
    "draw_multipliers",
    "empirical_copula",
    "parse_spec_token",
    "pseudo_observations",
    "replicate_process",
    "replicate_statistics",
    "run_test",
    "run_test_empirical",
    "sample_copula",
    "stat_r",
    "stat_r_empirical",
    "stat_s",
    "stat_s_empirical",
    "stat_t",
    "stat_t_empirical",
    "symmetry_statistics",
    "symmetry_statistics_empirical",
    "tau_to_param",
]
