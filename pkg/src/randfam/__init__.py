"""Restricted resampling over derangements (the random family method).

The observed pairing of two columns is compared with the distribution of
a statistic over every fixed-point-free re-pairing of the x column, either
exhaustively or by Monte Carlo sampling.
"""

from randfam.derangements import (
    Derangement,
    count_derangements,
    enumerate_derangements,
    is_derangement,
    iter_derangements,
    sample_derangement,
)
from randfam.engine import (
    Mode,
    RfmConfig,
    RfmResult,
    StatisticKind,
    expected_family_mean,
    percentile_of,
    rfm_test,
)
from randfam.errors import (
    CountRangeError,
    DegenerateInputError,
    DomainError,
    InputFormatError,
    RandomFamilyError,
    SizeRefusalError,
)
from randfam.kde import KdeConfig, kde_density, silverman_bandwidth
from randfam.shapiro import SwResult, shapiro_wilk
from randfam.stats import (
    DistributionSummary,
    PairedSample,
    covariance,
    ols_slope,
    pearson_r,
    t_cdf,
    t_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "CountRangeError",
    "DegenerateInputError",
    "Derangement",
    "DistributionSummary",
    "DomainError",
    "InputFormatError",
    "KdeConfig",
    "Mode",
    "PairedSample",
    "RandomFamilyError",
    "RfmConfig",
    "RfmResult",
    "SizeRefusalError",
    "StatisticKind",
    "SwResult",
    "count_derangements",
    "covariance",
    "enumerate_derangements",
    "expected_family_mean",
    "is_derangement",
    "iter_derangements",
    "kde_density",
    "ols_slope",
    "pearson_r",
    "percentile_of",
    "rfm_test",
    "sample_derangement",
    "shapiro_wilk",
    "silverman_bandwidth",
    "t_cdf",
    "t_statistic",
]
