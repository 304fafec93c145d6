"""Tests for maximum likelihood fitting and interval estimation."""

import math
from dataclasses import replace
from pathlib import Path
import sys

import numpy as np
import pytest
from scipy import optimize, stats

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))
from transmission_aft.core.config import FittingConfig
from transmission_aft.core.data import Outcome, PairRow, Segment, build_design_matrix
from transmission_aft.core.errors import InconsistentDataError, RankDeficientError
from transmission_aft.core.estimation import (
    FitResult,
    aic,
    aic_value,
    compare_families,
    fit_mle,
    lr_test,
    wald_ci,
)
from transmission_aft.core.estimation import fitting
from transmission_aft.core.estimation.fitting import CHI2_95, SINGULAR_INFORMATION, Z_975
from transmission_aft.core.likelihood import LikelihoodEngine, ModelSpec, ParamSet
from transmission_aft.core.simulation import SimConfig, simulate

EXTERNAL_ONLY = ModelSpec(None, "exponential", ())
TERMS = ("x_inf", "x_sus")


def _manual_fit(theta, variance, names=("b",), loglik=-10.0, terms=("b",)):
    return FitResult(
        internal_family="exponential",
        external_family="none",
        terms=list(terms),
        parameter_names=list(names),
        theta=list(theta),
        loglik=loglik,
        covariance=np.diag(variance).tolist(),
        aic=aic_value(loglik, len(names)),
        converged=True,
    )


@pytest.fixture(scope="module")
def simulated():
    truth = ParamSet(beta={"x_inf": 0.5, "x_sus": -0.5}, ln_lambda0=0.0, ln_mu0=-1.0)
    outcome = simulate(
        SimConfig(n_households=100, household_size=6, truth=truth, target_infections=150, seed=2024)
    )
    return outcome, build_design_matrix(outcome.pair_rows("complete-cohort", True), TERMS)


def test_closed_form_exponential_rate(external_events):
    """Ten events over forty units of person-time give ln(0.25)."""
    fit = fit_mle(build_design_matrix(external_events(10, 40.0), []), EXTERNAL_ONLY)
    assert fit.converged
    assert fit.estimate("ln_mu0") == pytest.approx(math.log(0.25), abs=1e-6)
    assert fit.loglik == pytest.approx(10 * math.log(0.25) - 10.0, abs=1e-9)


def test_single_internal_event():
    """One known internal event at local time 1 gives ln(lambda0) = 0."""
    row = PairRow(1, 2, 0.0, (Segment(0.0, 1.0),), Outcome.EVENT_KNOWN, 1.0)
    fit = fit_mle(build_design_matrix([row], []), ModelSpec("exponential", None, ()), lr_intervals=False)
    assert fit.estimate("ln_lambda0") == pytest.approx(0.0, abs=1e-6)


def test_wald_interval_of_exponential_rate(external_events):
    """Twenty-five events over 100 give ln(0.25) -/+ 0.392."""
    fit = fit_mle(build_design_matrix(external_events(25, 100.0), []), EXTERNAL_ONLY)
    lo, hi = fit.intervals["ln_mu0"]["wald"]
    assert fit.se("ln_mu0") == pytest.approx(0.2, abs=1e-5)
    assert lo == pytest.approx(math.log(0.25) - 0.392, abs=1e-3)
    assert hi == pytest.approx(math.log(0.25) + 0.392, abs=1e-3)


def test_lr_interval_matches_scalar_root(external_events):
    """Profile endpoints solve 2[D ln(rate_hat/rate) - (rate_hat - rate) T] = chi2 quantile."""
    D, T = 10, 40.0
    fit = fit_mle(build_design_matrix(external_events(D, T), []), EXTERNAL_ONLY)
    thetaHat = math.log(D / T)

    def deviance(theta):
        return 2.0 * (D * (thetaHat - theta) - (math.exp(thetaHat) - math.exp(theta)) * T) - CHI2_95

    expectedLo = optimize.brentq(deviance, thetaHat - 3.0, thetaHat)
    expectedHi = optimize.brentq(deviance, thetaHat, thetaHat + 3.0)
    lo, hi = fit.intervals["ln_mu0"]["lr"]
    assert lo == pytest.approx(expectedLo, abs=1e-5)
    assert hi == pytest.approx(expectedHi, abs=1e-5)
    # the profile interval of a rate is asymmetric on the log scale
    assert hi - thetaHat < thetaHat - lo
    for endpoint in (lo, hi):
        assert abs(deviance(endpoint)) < 1e-3


def test_aic_examples():
    """AIC is 2k - 2 loglik."""
    assert aic_value(-100.0, 2) == 204.0
    assert aic_value(-95.795, 6) == pytest.approx(203.59)
    assert aic_value(-100.0, 3) - aic_value(-100.0, 2) == 2.0
    assert aic(_manual_fit([0.0], [1.0], loglik=-100.0)) == 202.0


def test_wald_ci_standard_normal():
    """Estimate 0 with unit variance gives -/+ 1.96."""
    lo, hi = wald_ci(_manual_fit([0.0], [1.0]), "b")
    assert (lo, hi) == (-Z_975, Z_975)


def test_lr_test_nested_models():
    """Deviance 4 on one degree of freedom."""
    full = _manual_fit([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], names=("a", "b", "c"), loglik=-100.0, terms=())
    reduced = _manual_fit([0.0, 0.0], [1.0, 1.0], names=("a", "b"), loglik=-102.0, terms=())
    result = lr_test(full, reduced)
    assert result["deviance"] == pytest.approx(4.0)
    assert result["df"] == 1
    assert result["p_value"] == pytest.approx(stats.chi2.sf(4.0, 1))


def test_no_events_is_rejected(make_row):
    """A dataset without infections cannot be fitted."""
    with pytest.raises(InconsistentDataError):
        fit_mle(build_design_matrix([make_row(0, 1, 5.0)], []), EXTERNAL_ONLY)


def test_rank_deficient_design(simulated):
    """A binary covariate and its square are collinear."""
    outcome, _ = simulated
    dataset = build_design_matrix(outcome.pair_rows("complete-cohort", True), ["x_sus", "x_sus:x_sus"])
    with pytest.raises(RankDeficientError) as info:
        fit_mle(dataset, ModelSpec("exponential", "exponential", ("x_sus", "x_sus:x_sus")))
    assert info.value.columns == ["x_sus:x_sus"]


def test_estimates_recover_truth(simulated):
    """Every estimate lies within three standard errors of the truth."""
    outcome, dataset = simulated
    fit = fit_mle(dataset, outcome.spec, lr_intervals=False, p_values="wald")
    assert fit.converged
    truth = outcome.truth.to_vector(outcome.spec)
    for name, value in zip(fit.parameter_names, truth):
        assert abs(fit.estimate(name) - value) < 3.0 * fit.se(name)
    assert set(fit.p_values) == set(TERMS)
    assert all(0.0 <= p <= 1.0 for p in fit.p_values.values())


def test_lr_intervals_and_pvalues(simulated):
    """Profile intervals contain the estimate and LR p-values are probabilities."""
    outcome, dataset = simulated
    fit = fit_mle(dataset, outcome.spec)
    assert fit.p_value_method == "lr"
    for name in fit.parameter_names:
        lo, hi = fit.intervals[name]["lr"]
        assert lo < fit.estimate(name) < hi
    for name in TERMS:
        assert 0.0 < fit.p_values[name] <= 1.0


def test_time_rescaling_shifts_only_baselines(simulated):
    """Multiplying all times by 24 moves log baselines by -ln 24 and nothing else."""
    _, dataset = simulated
    rescaled = dataset.rescale_time(24.0)
    for spec in (
        ModelSpec("exponential", "exponential", TERMS),
        ModelSpec("weibull", "exponential", TERMS),
    ):
        a = fit_mle(dataset, spec, lr_intervals=False, p_values="none")
        b = fit_mle(rescaled, spec, lr_intervals=False, p_values="none")
        assert a.converged and b.converged
        for name in spec.parameter_names():
            shift = -math.log(24.0) if name in ("ln_lambda0", "ln_mu0") else 0.0
            assert b.estimate(name) == pytest.approx(a.estimate(name) + shift, abs=1e-6)


def test_nonconvergence_is_flagged(simulated):
    """Running out of iterations is reported, not raised."""
    outcome, dataset = simulated
    options = replace(FittingConfig(), maxIter=1)
    fit = fit_mle(dataset, outcome.spec, options, start=[2.0, 2.0, 2.0, 2.0])
    assert not fit.converged
    assert fit.intervals == {}


def test_family_choice_sets_parameter_names(simulated):
    """A log-logistic external family adds only ln_gamma_ext."""
    _, dataset = simulated
    fit = fit_mle(
        dataset, ModelSpec("exponential", "loglogistic", TERMS), lr_intervals=False, p_values="none"
    )
    assert fit.parameter_names == ["x_inf", "x_sus", "ln_lambda0", "ln_mu0", "ln_gamma_ext"]


def test_fit_json_round_trip():
    """Fits survive JSON, including unbounded interval endpoints."""
    fit = _manual_fit([0.3], [0.04])
    fit.intervals["b"] = {"wald": (-0.092, 0.692), "lr": (-math.inf, 0.7)}
    fit.p_values["b"] = 0.13
    restored = FitResult.from_json(fit.to_json())
    assert restored.intervals["b"]["lr"][0] == -math.inf
    assert restored.aic == fit.aic
    assert restored.theta == fit.theta
    assert restored.spec == fit.spec


def test_fit_json_file(temp_dir, external_events):
    """to_json writes a file from_json reads back."""
    fit = fit_mle(build_design_matrix(external_events(10, 40.0), []), EXTERNAL_ONLY)
    path = temp_dir / "fit.json"
    fit.to_json(path)
    assert FitResult.from_json(path).loglik == fit.loglik


def test_compare_families_marks_one_best(simulated):
    """The family grid reports every pair and marks the minimum AIC."""
    _, dataset = simulated
    rows = compare_families(
        dataset, TERMS, internal_families=("exponential", "weibull"), external_families=("exponential",)
    )
    assert [(r["internal_family"], r["external_family"]) for r in rows] == [
        ("exponential", "exponential"),
        ("weibull", "exponential"),
    ]
    best = [r for r in rows if r["best"]]
    assert len(best) == 1
    assert best[0]["aic"] == min(r["aic"] for r in rows if r["converged"])


def test_fitted_loglik_matches_engine(simulated):
    """The reported log-likelihood is the engine's value at the estimate."""
    outcome, dataset = simulated
    fit = fit_mle(dataset, outcome.spec, lr_intervals=False, p_values="none")
    engine = LikelihoodEngine(dataset, outcome.spec)
    assert engine.loglik(fit.theta) == pytest.approx(fit.loglik, abs=1e-12)


def test_singular_information_is_flagged(external_events, monkeypatch):
    """Converged fits with unusable variances are flagged and get no Wald interval."""
    monkeypatch.setattr(
        fitting, "_covariance", lambda engine, theta, options: np.full((theta.size, theta.size), np.nan)
    )
    fit = fit_mle(
        build_design_matrix(external_events(10, 40.0), []), EXTERNAL_ONLY, lr_intervals=False
    )
    assert fit.converged
    assert fit.information_singular
    assert fit.message == SINGULAR_INFORMATION
    assert "wald" not in fit.intervals["ln_mu0"]
    assert not _manual_fit([0.3], [0.04]).information_singular
    assert _manual_fit([0.3], [0.0]).information_singular
