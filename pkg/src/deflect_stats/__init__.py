"""Exploratory multivariate statistics for astro-geodetic vertical-deflection campaigns.

Standardization, correlation-matrix PCA with supplementary variables, a
label-permutation test on group median centres and a night-grouped bootstrap
of ordinary least squares fits.
"""

from deflect_stats.errors import (
    DeflectStatsError,
    DataError,
    NumericalError,
)
from deflect_stats.ingest import (
    ACTIVE_COLUMNS,
    Dataset,
    Observation,
    deflection_components,
    parse_dataset,
    write_dataset,
)
from deflect_stats.standardize import StandardizedMatrix, ExtremeFlag, standardize, flag_extremes
from deflect_stats.pca import (
    PcaModel,
    SymmetricMatrix,
    correlation_matrix,
    eigendecompose,
    fit_pca,
    strong_correlations,
)
from deflect_stats.permtest import (
    GroupMedianResult,
    PermutationTestReport,
    median_center,
    permutation_test,
)
from deflect_stats.bootreg import (
    BootstrapRegressionSummary,
    OlsFit,
    bootstrap_regression,
    f_pvalue,
    ols_fit,
    skewness,
)
from deflect_stats.synth import CampaignSpec, generate

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_COLUMNS",
    "BootstrapRegressionSummary",
    "CampaignSpec",
    "DataError",
    "Dataset",
    "DeflectStatsError",
    "ExtremeFlag",
    "GroupMedianResult",
    "NumericalError",
    "Observation",
    "OlsFit",
    "PcaModel",
    "PermutationTestReport",
    "StandardizedMatrix",
    "SymmetricMatrix",
    "bootstrap_regression",
    "correlation_matrix",
    "deflection_components",
    "eigendecompose",
    "f_pvalue",
    "fit_pca",
    "flag_extremes",
    "generate",
    "median_center",
    "ols_fit",
    "parse_dataset",
    "permutation_test",
    "skewness",
    "standardize",
    "strong_correlations",
    "write_dataset",
]
