"""Maximum likelihood estimation, model selection and SAR prediction."""

from .fitting import (
    FitResult,
    aic,
    aic_value,
    compare_families,
    default_start,
    fit_mle,
    lr_ci,
    lr_pvalue,
    lr_test,
    profile_loglik,
    wald_ci,
    wald_pvalue,
)
from .sar import predict_sar, predict_sar_table, profile_terms
from .selection import SelectionStep, backward_select

__all__ = [
    "FitResult",
    "fit_mle",
    "wald_ci",
    "lr_ci",
    "aic",
    "aic_value",
    "wald_pvalue",
    "lr_pvalue",
    "lr_test",
    "profile_loglik",
    "default_start",
    "compare_families",
    "backward_select",
    "SelectionStep",
    "predict_sar",
    "predict_sar_table",
    "profile_terms",
]
