"""Pairwise log-likelihood, its parameters, and numeric derivatives."""

from .derivatives import gradient, hessian, numeric_gradient, numeric_hessian
from .engine import (
    LikelihoodEngine,
    loglik_individual_unobserved,
    loglik_row_observed,
    loglik_total,
    pair_rate,
    total_hazard_at_event,
)
from .params import BASELINE_NAMES, ModelSpec, ParamSet

__all__ = [
    "BASELINE_NAMES",
    "ModelSpec",
    "ParamSet",
    "LikelihoodEngine",
    "pair_rate",
    "loglik_row_observed",
    "total_hazard_at_event",
    "loglik_individual_unobserved",
    "loglik_total",
    "gradient",
    "hessian",
    "numeric_gradient",
    "numeric_hessian",
]
