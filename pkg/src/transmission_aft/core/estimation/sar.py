"""
Secondary attack rate prediction.

The SAR of a source/subject pair is the chance of an infectious contact
within the source's infectious period, 1 - S_int(iota). Intervals come from
the delta method on psi = ln H_int(iota), whose gradient is taken numerically
over the full parameter vector, then mapped through 1 - exp(-exp(psi)). For
exponential internal models psi is the linear predictor plus ln(iota), so
this is the usual linear-predictor interval.
"""

import logging
import math
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..data.design import ZETA, parse_term
from ..errors import DomainError, TransmissionError, UnknownCovariateError
from ..hazards import HazardFamily
from ..likelihood import ParamSet
from ..likelihood.derivatives import numeric_gradient
from .fitting import FitResult, z_quantile

logger = logging.getLogger(__name__)


def _profile_vector(fit: FitResult, profile: Mapping[str, float]) -> np.ndarray:
    unknown = [name for name in profile if name not in fit.terms]
    if unknown:
        raise UnknownCovariateError(
            f"Profile covariate(s) {', '.join(unknown)} not in the fitted terms "
            f"({', '.join(fit.terms) or 'none'})"
        )
    return np.asarray([float(profile.get(term, 0.0)) for term in fit.terms], dtype=float)


def _log_cumulative(fit: FitResult, theta: np.ndarray, x: np.ndarray, iota: float) -> float:
    params = ParamSet.from_vector(fit.spec, theta)
    eta = float(x @ params.beta_vector(fit.terms)) + params.ln_lambda0
    family = fit.spec.internal_family
    shape = params.gamma_int if fit.spec.internal_shape else 1.0
    if family is HazardFamily.EXPONENTIAL:
        return eta + math.log(iota)
    return float(np.log(family.cumulative(eta, shape, np.asarray(iota))))


def _sar_from_log_cumulative(psi: float) -> float:
    return float(-np.expm1(-np.exp(psi)))


def predict_sar(
    fit: FitResult,
    profile: Mapping[str, float],
    infectious_period: float,
    level: float = 0.95,
) -> Tuple[float, Tuple[float, float]]:
    """
    Predicted SAR and its Wald interval for one covariate profile.

    Args:
        fit: Fit with an internal family
        profile: Formula-term values (missing terms count as 0)
        infectious_period: iota > 0
        level: Interval level

    Returns:
        (estimate, (lower, upper)), all in [0, 1]
    """
    if not fit.converged:
        raise TransmissionError(f"SAR prediction needs a converged fit ({fit.message})")
    if not fit.spec.has_internal:
        raise TransmissionError("SAR prediction needs a fit with an internal family")
    if not infectious_period > 0:
        raise DomainError(f"Infectious period must be positive, got {infectious_period}")

    x = _profile_vector(fit, profile)
    theta = np.asarray(fit.theta, dtype=float)
    psi = _log_cumulative(fit, theta, x, infectious_period)
    estimate = _sar_from_log_cumulative(psi)

    grad = numeric_gradient(lambda t: _log_cumulative(fit, t, x, infectious_period), theta)
    variance = float(grad @ fit.covariance_matrix() @ grad)
    if not (math.isfinite(variance) and variance >= 0):
        logger.warning(f"No SAR interval for {dict(profile)}: variance {variance}")
        return estimate, (math.nan, math.nan)
    half = z_quantile(level) * math.sqrt(variance)
    return estimate, (
        _sar_from_log_cumulative(psi - half),
        _sar_from_log_cumulative(psi + half),
    )


def profile_terms(
    terms: Sequence[str],
    source: Mapping[str, float],
    subject: Mapping[str, float],
) -> Dict[str, float]:
    """
    Term values for an internal pair from base covariates of each side.

    ``<c>_inf`` reads c from the source profile and ``<c>_sus`` from the
    subject profile; zeta is 0.
    """
    values = {}
    for term in terms:
        value = 1.0
        for factor in parse_term(term):
            if factor == ZETA:
                value = 0.0
                continue
            base, _, role = factor.rpartition("_")
            side = {"inf": source, "sus": subject}.get(role)
            if side is None or base not in side:
                raise UnknownCovariateError(
                    f"Term '{term}': no value for '{factor}' in the "
                    f"{'source' if role == 'inf' else 'subject'} profile"
                )
            value *= float(side[base])
        values[term] = value
    return values


def predict_sar_table(
    fit: FitResult,
    sources: Mapping[str, Mapping[str, float]],
    subjects: Mapping[str, Mapping[str, float]],
    infectious_period: float,
    level: float = 0.95,
) -> List[Dict[str, object]]:
    """One row per (source profile, subject profile)."""
    rows = []
    for sourceLabel, source in sources.items():
        for subjectLabel, subject in subjects.items():
            estimate, (lo, hi) = predict_sar(
                fit, profile_terms(fit.terms, source, subject), infectious_period, level
            )
            rows.append(
                {
                    "source": sourceLabel,
                    "subject": subjectLabel,
                    "sar": estimate,
                    "lo": lo,
                    "hi": hi,
                }
            )
    return rows
