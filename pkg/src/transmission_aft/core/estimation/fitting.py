"""
Maximum likelihood fitting, Wald and profile-likelihood intervals, AIC.

fit_mle maximizes the pairwise log-likelihood with BFGS on numeric
gradients, then polishes with damped Newton steps on the numeric Hessian
until both the relative log-likelihood change and the gradient max-norm
fall below tolerance. Families with a shape parameter are warm-started from
the exponential fit of the same data.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import optimize, stats

from ..config.config import FittingConfig
from ..data.design import PairDataset, collinear_columns
from ..errors import (
    InconsistentDataError,
    LikelihoodEvaluationError,
    RankDeficientError,
    TransmissionError,
)
from ..hazards import HazardFamily
from ..likelihood import LikelihoodEngine, ModelSpec, ParamSet
from ..likelihood.derivatives import numeric_gradient, numeric_hessian

logger = logging.getLogger(__name__)

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
]

# chi-square(1) 0.95 quantile and standard normal 0.975 quantile
CHI2_95 = 3.841459
Z_975 = 1.959964

MAX_NEWTON_STEPS = 50

SINGULAR_INFORMATION = "converged with singular observed information"


def z_quantile(level: float) -> float:
    return Z_975 if level == 0.95 else float(stats.norm.ppf(0.5 + level / 2.0))


def chi2_quantile(level: float) -> float:
    return CHI2_95 if level == 0.95 else float(stats.chi2.ppf(level, 1))


class FitResult(BaseModel):
    """Maximum likelihood fit of one model to one pair dataset."""

    internal_family: str = Field(..., description="Internal family or 'none'")
    external_family: str = Field(..., description="External family or 'none'")
    terms: List[str] = Field(default_factory=list, description="Formula terms in order")
    parameter_names: List[str]
    theta: List[float] = Field(..., description="Estimates in parameter_names order")
    loglik: float
    covariance: List[List[float]] = Field(..., description="Inverse observed information")
    aic: float
    converged: bool
    iterations: int = 0
    n_events: int = 0
    n_rows: int = 0
    ci_level: float = 0.95
    intervals: Dict[str, Dict[str, Tuple[float, float]]] = Field(
        default_factory=dict, description="Per parameter: {'wald': (lo, hi), 'lr': (lo, hi)}"
    )
    p_values: Dict[str, float] = Field(default_factory=dict)
    p_value_method: str = "lr"
    message: str = ""

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.internal_family, self.external_family, tuple(self.terms))

    @property
    def theta_hat(self) -> ParamSet:
        return ParamSet.from_vector(self.spec, self.theta)

    @property
    def n_params(self) -> int:
        return len(self.parameter_names)

    def index(self, param: str) -> int:
        try:
            return self.parameter_names.index(param)
        except ValueError:
            raise TransmissionError(
                f"Unknown parameter '{param}' (fit has {', '.join(self.parameter_names)})"
            )

    def estimate(self, param: str) -> float:
        return self.theta[self.index(param)]

    def variance(self, param: str) -> float:
        k = self.index(param)
        return self.covariance[k][k]

    def se(self, param: str) -> float:
        var = self.variance(param)
        return math.sqrt(var) if var > 0 else math.nan

    def covariance_matrix(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)

    @property
    def information_singular(self) -> bool:
        """Some variance is missing, infinite or not positive."""
        variances = np.diag(self.covariance_matrix())
        return not bool(np.all(np.isfinite(variances) & (variances > 0)))

    def summary_rows(self) -> List[Dict[str, object]]:
        """One row per parameter, with rate ratios for regression terms."""
        rows = []
        for name, value in zip(self.parameter_names, self.theta):
            ci = self.intervals.get(name, {})
            row = {
                "parameter": name,
                "estimate": value,
                "se": self.se(name),
                "wald_lo": ci.get("wald", (math.nan, math.nan))[0],
                "wald_hi": ci.get("wald", (math.nan, math.nan))[1],
                "lr_lo": ci.get("lr", (math.nan, math.nan))[0],
                "lr_hi": ci.get("lr", (math.nan, math.nan))[1],
                "p_value": self.p_values.get(name, math.nan),
            }
            if name in self.terms:
                source = ci.get("lr", ci.get("wald", (math.nan, math.nan)))
                row["rate_ratio"] = math.exp(value)
                row["rate_ratio_lo"] = math.exp(source[0])
                row["rate_ratio_hi"] = math.exp(source[1])
            rows.append(row)
        return rows

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        # json writes +/-Infinity for unbounded profile endpoints
        text = json.dumps(self.model_dump(), indent=2)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "FitResult":
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
        return cls.model_validate(json.loads(text))


def aic_value(loglik: float, n_params: int) -> float:
    return 2.0 * n_params - 2.0 * loglik


def aic(fit: FitResult) -> float:
    """2k - 2 loglik."""
    return aic_value(fit.loglik, fit.n_params)


def default_start(dataset: PairDataset, spec: ModelSpec) -> np.ndarray:
    """beta = 0, log baselines at ln(events / person-time), log shapes at 0."""
    personTime = dataset.person_time()
    events = max(dataset.n_events, 1)
    logRate = math.log(events / personTime) if personTime > 0 else 0.0
    values = {name: 0.0 for name in spec.parameter_names()}
    for name in ("ln_lambda0", "ln_mu0"):
        if name in values:
            values[name] = logRate
    return np.asarray([values[name] for name in spec.parameter_names()], dtype=float)


def _exponential_counterpart(spec: ModelSpec) -> ModelSpec:
    return ModelSpec(
        HazardFamily.EXPONENTIAL if spec.has_internal else None,
        HazardFamily.EXPONENTIAL if spec.has_external else None,
        spec.terms,
    )


def _safe_objective(engine: LikelihoodEngine):
    def negative(theta: np.ndarray) -> float:
        try:
            value = engine.loglik(theta)
        except LikelihoodEvaluationError:
            return math.inf
        return -value if math.isfinite(value) else math.inf

    return negative


def _maximize(
    f,
    start: np.ndarray,
    options: FittingConfig,
) -> Tuple[np.ndarray, float, bool, int, str]:
    """
    Maximize f from start.

    Returns:
        (theta, f(theta), converged, iterations, message)
    """
    negative = f

    def jac(theta):
        try:
            return numeric_gradient(lambda x: -negative(x), theta, options.gradientStep) * -1.0
        except LikelihoodEvaluationError:
            return np.full_like(theta, np.nan)

    theta = np.asarray(start, dtype=float)
    if not math.isfinite(negative(theta)):
        return theta, -math.inf, False, 0, "log-likelihood is not finite at the start point"

    iterations = 0
    if theta.size:
        result = optimize.minimize(
            negative,
            theta,
            method="BFGS",
            jac=jac,
            options={"maxiter": options.maxIter, "gtol": options.gradTol},
        )
        iterations = int(result.nit)
        if math.isfinite(result.fun) and result.fun <= negative(theta):
            theta = np.asarray(result.x, dtype=float)
    ll = -negative(theta)

    relChange = math.inf
    message = "maximum iterations reached"
    for _ in range(MAX_NEWTON_STEPS):
        if iterations >= options.maxIter:
            break
        try:
            g = numeric_gradient(lambda x: -negative(x), theta, options.gradientStep)
        except LikelihoodEvaluationError as e:
            message = str(e)
            break
        if theta.size == 0 or (
            np.max(np.abs(g)) < options.gradTol and relChange < options.relTol
        ):
            return theta, ll, True, iterations, "converged"
        try:
            H = numeric_hessian(lambda x: -negative(x), theta, options.hessianStep)
            step = np.linalg.solve(-H, g)
            np.linalg.cholesky(-H)
        except (np.linalg.LinAlgError, LikelihoodEvaluationError):
            # Hessian not negative definite: fall back to a gradient step
            step = g / max(1.0, float(np.max(np.abs(g))))
        iterations += 1

        scale = 1.0
        candidate, candidateLl = theta, ll
        while scale > 1e-10:
            trial = theta + scale * step
            trialLl = -negative(trial)
            if math.isfinite(trialLl) and trialLl >= ll - 1e-12 * max(1.0, abs(ll)):
                candidate, candidateLl = trial, trialLl
                break
            scale /= 2.0
        relChange = abs(candidateLl - ll) / max(1.0, abs(ll))
        if candidate is theta:
            message = "line search failed"
            g = numeric_gradient(lambda x: -negative(x), theta, options.gradientStep)
            converged = bool(np.max(np.abs(g)) < options.gradTol)
            return theta, ll, converged, iterations, "converged" if converged else message
        theta, ll = candidate, candidateLl

    return theta, ll, False, iterations, message


def fit_mle(
    dataset: PairDataset,
    spec: ModelSpec,
    options: Optional[FittingConfig] = None,
    *,
    start: Optional[Sequence[float]] = None,
    lr_intervals: bool = True,
    p_values: str = "lr",
) -> FitResult:
    """
    Fit ``spec`` to ``dataset`` by maximum likelihood.

    Args:
        dataset: Pair dataset built with the model's formula terms
        spec: Families and terms
        options: Fitting tolerances and interval settings
        start: Start vector (skips the default start and warm start)
        lr_intervals: Also compute profile-likelihood intervals
        p_values: "lr", "wald" or "none"

    Returns:
        FitResult; converged=False when tolerances were not met, and
        information_singular set when the covariance has no usable variances

    Raises:
        InconsistentDataError: dataset has no events
        RankDeficientError: design columns are collinear
    """
    options = options or FittingConfig()
    if dataset.n_events == 0:
        raise InconsistentDataError("Cannot fit a dataset without events")
    redundant = collinear_columns(dataset, spec.has_internal, spec.has_external)
    if redundant:
        raise RankDeficientError(
            f"Design matrix is rank deficient; collinear column(s): {', '.join(redundant)}",
            redundant,
        )

    engine = LikelihoodEngine(dataset, spec, workers=options.workers)
    if start is not None:
        theta0 = np.asarray(start, dtype=float)
    else:
        theta0 = default_start(dataset, spec)
        if options.warmStart and (spec.internal_shape or spec.external_shape):
            theta0 = _warm_start(dataset, spec, options, theta0)

    theta, ll, converged, iterations, message = _maximize(
        _safe_objective(engine), theta0, options
    )
    logger.info(
        f"Fit {spec.to_dict()['internal_family']}/{spec.to_dict()['external_family']} "
        f"with {len(spec.terms)} term(s): loglik={ll:.6f}, converged={converged}, "
        f"iterations={iterations}"
    )
    if not converged:
        logger.warning(f"Fit did not converge: {message}")

    covariance = _covariance(engine, theta, options)
    fit = FitResult(
        internal_family=spec.to_dict()["internal_family"],
        external_family=spec.to_dict()["external_family"],
        terms=list(spec.terms),
        parameter_names=spec.parameter_names(),
        theta=theta.tolist(),
        loglik=ll,
        covariance=covariance.tolist(),
        aic=aic_value(ll, spec.n_params),
        converged=converged,
        iterations=iterations,
        n_events=dataset.n_events,
        n_rows=dataset.n_rows,
        ci_level=options.ciLevel,
        p_value_method=p_values,
        message=message,
    )
    if converged and fit.information_singular:
        # boundary or flat optimum: estimate stands, standard errors do not
        fit.message = SINGULAR_INFORMATION
        logger.warning(f"Fit {SINGULAR_INFORMATION}; no Wald inference")
    if converged:
        _attach_inference(fit, dataset, spec, options, engine, lr_intervals, p_values)
    return fit


def _warm_start(
    dataset: PairDataset, spec: ModelSpec, options: FittingConfig, theta0: np.ndarray
) -> np.ndarray:
    expSpec = _exponential_counterpart(spec)
    expEngine = LikelihoodEngine(dataset, expSpec, workers=options.workers)
    expTheta, _, expConverged, _, _ = _maximize(
        _safe_objective(expEngine), default_start(dataset, expSpec), options
    )
    if not expConverged:
        logger.warning("Exponential warm-start fit did not converge; using default start")
        return theta0
    warm = ParamSet.from_vector(expSpec, expTheta)
    return ParamSet(
        beta=warm.beta,
        ln_lambda0=warm.ln_lambda0,
        ln_mu0=warm.ln_mu0,
        ln_gamma_int=0.0 if spec.internal_shape else None,
        ln_gamma_ext=0.0 if spec.external_shape else None,
    ).to_vector(spec)


def _covariance(engine: LikelihoodEngine, theta: np.ndarray, options: FittingConfig) -> np.ndarray:
    n = theta.size
    try:
        H = numeric_hessian(engine.loglik, theta, options.hessianStep)
        covariance = np.linalg.inv(-H)
    except (np.linalg.LinAlgError, LikelihoodEvaluationError) as e:
        logger.warning(f"Observed information is not invertible: {e}")
        return np.full((n, n), np.nan)
    return (covariance + covariance.T) / 2.0


def _attach_inference(
    fit: FitResult,
    dataset: PairDataset,
    spec: ModelSpec,
    options: FittingConfig,
    engine: LikelihoodEngine,
    lr_intervals: bool,
    p_values: str,
):
    for name in fit.parameter_names:
        entry = {}
        try:
            entry["wald"] = wald_ci(fit, name, options.ciLevel)
        except TransmissionError as e:
            logger.warning(f"No Wald interval for {name}: {e}")
        if lr_intervals:
            entry["lr"] = lr_ci(fit, name, dataset, spec, options.ciLevel, options, engine)
        fit.intervals[name] = entry

    for name in spec.terms:
        if p_values == "lr":
            fit.p_values[name] = lr_pvalue(fit, name, dataset, spec, options, engine)
        elif p_values == "wald":
            try:
                fit.p_values[name] = wald_pvalue(fit, name)
            except TransmissionError as e:
                logger.warning(f"No Wald p-value for {name}: {e}")


def wald_ci(fit: FitResult, param: str, level: float = 0.95) -> Tuple[float, float]:
    """theta_k -/+ z * sqrt(cov_kk)."""
    var = fit.variance(param)
    if not (math.isfinite(var) and var > 0):
        raise TransmissionError(f"Variance of {param} is not positive ({var})")
    half = z_quantile(level) * math.sqrt(var)
    value = fit.estimate(param)
    return (value - half, value + half)


def wald_pvalue(fit: FitResult, param: str) -> float:
    var = fit.variance(param)
    if not (math.isfinite(var) and var > 0):
        raise TransmissionError(f"Variance of {param} is not positive ({var})")
    return float(2.0 * stats.norm.sf(abs(fit.estimate(param)) / math.sqrt(var)))


def profile_loglik(
    engine: LikelihoodEngine,
    theta_hat: Sequence[float],
    k: int,
    value: float,
    options: FittingConfig,
    start: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """
    Log-likelihood maximized over every parameter except theta_k = value.

    Returns:
        (profile log-likelihood, maximizing vector of the other parameters)
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    others = np.delete(theta_hat, k) if start is None else np.asarray(start, dtype=float)

    def full(rest: np.ndarray) -> np.ndarray:
        return np.insert(rest, k, value)

    negative = _safe_objective(engine)
    if others.size == 0:
        ll = -negative(full(others))
        return ll, others
    rest, ll, _, _, _ = _maximize(lambda x: negative(full(x)), others, options)
    return ll, rest


class _Profile:
    """Deviance of one parameter's profile, reusing the last maximizer as start."""

    def __init__(self, fit: FitResult, param: str, engine: LikelihoodEngine, options: FittingConfig):
        self.fit = fit
        self.k = fit.index(param)
        self.engine = engine
        self.options = options
        self.rest = None

    def deviance(self, value: float) -> float:
        ll, rest = profile_loglik(
            self.engine, self.fit.theta, self.k, value, self.options, start=self.rest
        )
        if not math.isfinite(ll):
            return math.inf
        self.rest = rest
        # the profile can only sit below the maximum
        return max(0.0, 2.0 * (self.fit.loglik - ll))


def lr_ci(
    fit: FitResult,
    param: str,
    dataset: PairDataset,
    spec: ModelSpec,
    level: float = 0.95,
    options: Optional[FittingConfig] = None,
    engine: Optional[LikelihoodEngine] = None,
) -> Tuple[float, float]:
    """
    Profile-likelihood interval for one parameter.

    Each endpoint solves 2[loglik(theta_hat) - profile(theta_k)] = chi2_1(level)
    by Brent's method on a bracket grown outward from the Wald endpoint.
    An endpoint not reached within lrMaxSE standard errors is returned as
    -inf or +inf.
    """
    options = options or FittingConfig()
    engine = engine or LikelihoodEngine(dataset, spec, workers=options.workers)
    critical = chi2_quantile(level)
    estimate = fit.estimate(param)
    se = fit.se(param)
    if not math.isfinite(se):
        se = 1.0
    z = z_quantile(level)

    endpoints = []
    for direction in (-1.0, 1.0):
        profile = _Profile(fit, param, engine, options)

        def g(value):
            dev = profile.deviance(value)
            return (1e12 if math.isinf(dev) else dev) - critical

        inner = estimate
        multiple = z
        outer = None
        while multiple <= options.lrMaxSE:
            candidate = estimate + direction * multiple * se
            if g(candidate) > 0:
                outer = candidate
                break
            inner = candidate
            multiple *= 1.5
        if outer is None:
            candidate = estimate + direction * options.lrMaxSE * se
            if g(candidate) > 0:
                outer = candidate
        if outer is None:
            logger.warning(
                f"Profile of {param} does not drop by {critical:.4f} within "
                f"{options.lrMaxSE:g} SEs on the {'lower' if direction < 0 else 'upper'} side"
            )
            endpoints.append(direction * math.inf)
            continue
        profile.rest = None
        lo, hi = sorted((inner, outer))
        endpoints.append(optimize.brentq(g, lo, hi, xtol=options.lrTol, rtol=4 * np.finfo(float).eps))
    return (endpoints[0], endpoints[1])


def lr_pvalue(
    fit: FitResult,
    param: str,
    dataset: PairDataset,
    spec: ModelSpec,
    options: Optional[FittingConfig] = None,
    engine: Optional[LikelihoodEngine] = None,
) -> float:
    """Likelihood ratio p-value for theta_k = 0."""
    options = options or FittingConfig()
    engine = engine or LikelihoodEngine(dataset, spec, workers=options.workers)
    deviance = _Profile(fit, param, engine, options).deviance(0.0)
    return float(stats.chi2.sf(deviance, 1))


def lr_test(full: FitResult, reduced: FitResult) -> Dict[str, float]:
    """Likelihood ratio test of a reduced model nested in ``full``."""
    df = full.n_params - reduced.n_params
    if df <= 0:
        raise TransmissionError(
            f"Full model must have more parameters than the reduced one ({full.n_params} vs {reduced.n_params})"
        )
    deviance = max(0.0, 2.0 * (full.loglik - reduced.loglik))
    return {"deviance": deviance, "df": df, "p_value": float(stats.chi2.sf(deviance, df))}


def compare_families(
    dataset: PairDataset,
    terms: Sequence[str],
    options: Optional[FittingConfig] = None,
    internal_families: Sequence[str] = ("exponential", "weibull", "loglogistic"),
    external_families: Sequence[str] = ("exponential", "weibull", "loglogistic"),
) -> List[Dict[str, object]]:
    """
    Fit every internal x external family pair and tabulate AIC.

    Rows come back in grid order; ``best`` marks the minimum AIC among
    converged fits.
    """
    options = options or FittingConfig()
    rows = []
    for internal in internal_families:
        for external in external_families:
            spec = ModelSpec(internal, external, tuple(terms))
            try:
                fit = fit_mle(dataset, spec, options, lr_intervals=False, p_values="none")
            except TransmissionError as e:
                logger.warning(f"Skipping {internal}/{external}: {e}")
                rows.append(
                    {
                        "internal_family": internal,
                        "external_family": external,
                        "loglik": math.nan,
                        "n_params": spec.n_params,
                        "aic": math.nan,
                        "converged": False,
                    }
                )
                continue
            rows.append(
                {
                    "internal_family": internal,
                    "external_family": external,
                    "loglik": fit.loglik,
                    "n_params": fit.n_params,
                    "aic": fit.aic,
                    "converged": fit.converged,
                }
            )

    converged = [row for row in rows if row["converged"]]
    best = min(converged, key=lambda row: row["aic"]) if converged else None
    for row in rows:
        row["best"] = row is best
    if best is not None:
        logger.info(
            f"Minimum AIC {best['aic']:.2f} for {best['internal_family']}/{best['external_family']}"
        )
    return rows
