"""Tests for the parametric hazard families."""

import math
from pathlib import Path
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))
from transmission_aft.core.errors import DomainError
from transmission_aft.core.hazards import (
    HazardFamily,
    RateShape,
    cumulative_hazard,
    hazard,
    sample_time,
    survival,
)

EXP = HazardFamily.EXPONENTIAL
WEI = HazardFamily.WEIBULL
LL = HazardFamily.LOGLOGISTIC
GRID = [(rate, shape) for rate in (0.25, 1.0, 4.0) for shape in (0.5, 1.0, 2.0)]


def test_hazard_examples():
    """Hazards match the closed forms at hand-checked points."""
    assert hazard(EXP, RateShape(1.0), 0.7) == pytest.approx(1.0)
    assert hazard(WEI, RateShape(1.0, 1.0), 2.0) == pytest.approx(1.0)
    assert hazard(LL, RateShape(1.0, 2.0), 1.0) == pytest.approx(1.0)
    assert hazard(WEI, RateShape(2.0, 0.5), 1.0) == pytest.approx(0.70711, abs=1e-5)


def test_cumulative_hazard_examples():
    """Cumulative hazards match the closed forms."""
    assert cumulative_hazard(EXP, RateShape(1.0), 3.0) == pytest.approx(3.0)
    assert cumulative_hazard(WEI, RateShape(1.0, 2.0), 2.0) == pytest.approx(4.0)
    assert cumulative_hazard(LL, RateShape(1.0, 1.0), 1.0) == pytest.approx(math.log(2.0))


def test_survival_examples():
    """Survival is one at zero and matches known values."""
    for family in HazardFamily:
        assert survival(family, RateShape(1.3, 1.7), 0.0) == 1.0
    assert survival(EXP, RateShape(0.5), 2.0) == pytest.approx(math.exp(-1.0))
    assert survival(LL, RateShape(1.0, 2.0), 1.0) == pytest.approx(0.5)


def test_sample_time_examples():
    """Inverse-transform draws invert the survival function."""
    assert sample_time(EXP, RateShape(2.0), 1.0 - math.exp(-2.0)) == pytest.approx(1.0)
    assert sample_time(LL, RateShape(4.0, 3.0), 0.5) == pytest.approx(0.25)
    assert sample_time(WEI, RateShape(1.0, 2.0), 0.9) == pytest.approx(1.51743, abs=1e-5)


def test_survival_equals_exp_minus_cumulative_on_grid():
    """S(t) = exp(-H(t)) across families, rates, shapes and a log time grid."""
    times = np.logspace(-6, 3, 50)
    for family in HazardFamily:
        for rate, shape in GRID:
            params = RateShape(rate, shape)
            S = survival(family, params, times)
            H = cumulative_hazard(family, params, times)
            assert np.max(np.abs(S - np.exp(-H))) < 1e-12


def test_loglogistic_survival_closed_form():
    """Log-logistic survival equals 1 / (1 + (lambda t)^gamma)."""
    times = np.logspace(-3, 2, 30)
    for rate, shape in GRID:
        expected = 1.0 / (1.0 + (rate * times) ** shape)
        assert np.max(np.abs(survival(LL, RateShape(rate, shape), times) - expected)) < 1e-12


def test_hazard_is_derivative_of_cumulative():
    """A central difference of H matches h to relative error 1e-6."""
    times = np.logspace(-3, 2, 25)
    for family in HazardFamily:
        for rate, shape in GRID:
            params = RateShape(rate, shape)
            step = times * 1e-5
            numeric = (
                cumulative_hazard(family, params, times + step)
                - cumulative_hazard(family, params, times - step)
            ) / (2 * step)
            exact = hazard(family, params, times)
            assert np.max(np.abs(numeric - exact) / exact) < 1e-6


def test_cumulative_hazard_nondecreasing_and_zero_at_origin():
    """H(0) = 0 and H never decreases."""
    times = np.concatenate([[0.0], np.logspace(-6, 3, 40)])
    for family in HazardFamily:
        for rate, shape in GRID:
            H = cumulative_hazard(family, RateShape(rate, shape), times)
            assert H[0] == 0.0
            assert np.all(np.diff(H) >= 0)


def test_weibull_shape_one_nests_exponential():
    """Weibull with shape 1 agrees with the exponential to 1e-14."""
    times = np.logspace(-6, 3, 40)
    for rate in (0.25, 1.0, 4.0):
        weibull = RateShape(rate, 1.0)
        expo = RateShape(rate)
        assert np.max(np.abs(hazard(WEI, weibull, times) - hazard(EXP, expo, times))) < 1e-14
        assert np.max(
            np.abs(cumulative_hazard(WEI, weibull, times) - cumulative_hazard(EXP, expo, times))
        ) < 1e-14 * np.max(cumulative_hazard(EXP, expo, times))


def test_survival_of_sample_is_one_minus_u():
    """S(sample_time(u)) = 1 - u to 1e-12."""
    for family in HazardFamily:
        for rate, shape in GRID:
            params = RateShape(rate, shape)
            for u in (0.01, 0.5, 0.99):
                t = sample_time(family, params, u)
                assert abs(survival(family, params, t) - (1.0 - u)) < 1e-12


def test_exponential_ignores_shape():
    """The exponential family has no shape parameter."""
    assert not EXP.has_shape
    assert hazard(EXP, RateShape(2.0, 5.0), 3.0) == pytest.approx(2.0)


def test_hazard_at_zero_for_small_shape_is_infinite():
    """Shape below one gives an infinite hazard at t = 0."""
    assert hazard(WEI, RateShape(1.0, 0.5), 0.0) == math.inf
    assert hazard(WEI, RateShape(1.0, 2.0), 0.0) == 0.0


def test_domain_errors():
    """Negative times, bad variates and bad parameters are rejected."""
    with pytest.raises(DomainError):
        hazard(EXP, RateShape(1.0), -0.1)
    with pytest.raises(DomainError):
        cumulative_hazard(WEI, RateShape(1.0, 2.0), np.array([1.0, -1.0]))
    with pytest.raises(DomainError):
        sample_time(EXP, RateShape(1.0), 0.0)
    with pytest.raises(DomainError):
        sample_time(EXP, RateShape(1.0), 1.0)
    with pytest.raises(DomainError):
        RateShape(0.0)
    with pytest.raises(DomainError):
        RateShape(1.0, -2.0)
    with pytest.raises(DomainError):
        HazardFamily.parse("gamma")


def test_family_parse_accepts_names():
    """Families are named by lower-case strings."""
    assert HazardFamily.parse("Weibull") is WEI
    assert HazardFamily.parse(LL) is LL


def test_tiny_times_do_not_overflow():
    """A very small time with a large shape stays finite."""
    H = cumulative_hazard(WEI, RateShape(1.0, 2.0), 1e-320)
    assert H == pytest.approx(0.0)
    assert math.isfinite(cumulative_hazard(LL, RateShape(1.0, 0.5), 1e-320))
