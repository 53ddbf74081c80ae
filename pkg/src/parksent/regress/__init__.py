"""Associations between regional parking sentiment and block-group covariates."""
from .correlation import (
    CohortDifference,
    CorrelationReport,
    FactorCorrelation,
    GroupCorrelation,
    between_cbsa_correlations,
    cohort_difference,
    pearson,
    within_cbsa_correlations,
)
from .gam import (
    GROUP,
    TENSOR,
    DesignMatrix,
    GamFit,
    LinearTerm,
    SmoothBlock,
    build_design,
    fit_gam,
    ols,
    significance_stars,
)
from .selection import (
    StepwiseStep,
    StepwiseTrace,
    VifReport,
    gaussian_aic,
    stepwise_aic,
    variance_inflation,
    vif_filter,
)
from .table import model_table_rows, write_model_table

__all__ = [
    "CohortDifference", "CorrelationReport", "FactorCorrelation", "GroupCorrelation",
    "between_cbsa_correlations", "cohort_difference", "pearson", "within_cbsa_correlations",
    "GROUP", "TENSOR", "DesignMatrix", "GamFit", "LinearTerm", "SmoothBlock", "build_design", "fit_gam",
    "ols", "significance_stars", "StepwiseStep", "StepwiseTrace", "VifReport", "gaussian_aic",
    "stepwise_aic", "variance_inflation", "vif_filter", "model_table_rows", "write_model_table",
]
