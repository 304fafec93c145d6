"""
Parametric failure-time families for contact intervals and external contact times.

All three families use a rate/shape parameterization in which the scaled time
lambda * t carries the rate, so that exp(-beta * x) acts as an acceleration
factor on the time axis:

    exponential   h(t) = lam                          H(t) = lam * t
    weibull       h(t) = g lam (lam t)^(g-1)          H(t) = (lam t)^g
    loglogistic   h(t) = g lam (lam t)^(g-1) / (1 + (lam t)^g)
                                                       H(t) = ln(1 + (lam t)^g)

Weibull with g = 1 is the exponential. Rates and shapes are carried on the
log scale by the likelihood; the array methods on HazardFamily take the log
rate directly so a large negative linear predictor never underflows to a
zero rate.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from ..errors import DomainError

__all__ = [
    "HazardFamily",
    "RateShape",
    "hazard",
    "cumulative_hazard",
    "survival",
    "sample_time",
]

ArrayLike = Union[float, np.ndarray]

# ln t is clamped here for t below TINY_TIME so (lam t)^g never overflows
LOG_TIME_FLOOR = -745.0
TINY_TIME = 1e-300


def _log_time(t: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(t < TINY_TIME, LOG_TIME_FLOOR, np.log(np.maximum(t, TINY_TIME)))


def _as_times(t: ArrayLike) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise DomainError(f"Time must be non-negative, got {t}")
    return t


def _unwrap(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


class HazardFamily(str, Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    LOGLOGISTIC = "loglogistic"

    @classmethod
    def parse(cls, name: Union[str, "HazardFamily"]) -> "HazardFamily":
        if isinstance(name, HazardFamily):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise DomainError(f"Unknown hazard family '{name}' (expected {valid})")

    @property
    def has_shape(self) -> bool:
        return self is not HazardFamily.EXPONENTIAL

    # Array kernels on the log-rate scale. t must already be validated.

    def cumulative(self, logRate: ArrayLike, shape: float, t: np.ndarray) -> np.ndarray:
        logRate = np.asarray(logRate, dtype=float)
        if self is HazardFamily.EXPONENTIAL or (
            self is HazardFamily.WEIBULL and shape == 1.0
        ):
            return np.exp(logRate) * t
        # log of (lam t)^g
        logScaled = shape * (logRate + _log_time(t))
        if self is HazardFamily.WEIBULL:
            values = np.exp(logScaled)
        else:
            values = np.logaddexp(0.0, logScaled)
        return np.where(t == 0, 0.0, values)

    def log_hazard(self, logRate: ArrayLike, shape: float, t: np.ndarray) -> np.ndarray:
        logRate = np.asarray(logRate, dtype=float)
        if self is HazardFamily.EXPONENTIAL:
            return np.broadcast_to(logRate, np.broadcast(logRate, t).shape).copy()
        logT = _log_time(t)
        values = np.log(shape) + logRate + (shape - 1.0) * (logRate + logT)
        if self is HazardFamily.LOGLOGISTIC:
            values = values - np.logaddexp(0.0, shape * (logRate + logT))
        if shape < 1.0:
            atZero = np.inf
        elif shape > 1.0:
            atZero = -np.inf
        else:
            atZero = logRate
        return np.where(t == 0, atZero, values)

    def inverse_survival(self, logRate: float, shape: float, u: float) -> float:
        """Time at which survival equals 1 - u."""
        if self is HazardFamily.EXPONENTIAL:
            return float(-np.log1p(-u) / np.exp(logRate))
        if self is HazardFamily.WEIBULL:
            return float((-np.log1p(-u)) ** (1.0 / shape) / np.exp(logRate))
        return float((u / (1.0 - u)) ** (1.0 / shape) / np.exp(logRate))


@dataclass(frozen=True)
class RateShape:
    """Rate (1/time) and dimensionless shape of a failure-time distribution."""

    rate: float
    shape: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise DomainError(f"Rate must be positive and finite, got {self.rate}")
        if not np.isfinite(self.shape) or self.shape <= 0:
            raise DomainError(f"Shape must be positive and finite, got {self.shape}")

    @classmethod
    def from_log(cls, logRate: float, logShape: float = 0.0) -> "RateShape":
        return cls(rate=float(np.exp(logRate)), shape=float(np.exp(logShape)))

    @property
    def log_rate(self) -> float:
        return float(np.log(self.rate))

    def shape_for(self, family: HazardFamily) -> float:
        return 1.0 if family is HazardFamily.EXPONENTIAL else self.shape


def hazard(family: HazardFamily, params: RateShape, t: ArrayLike) -> ArrayLike:
    """Hazard h(t); +inf at t = 0 when the shape is below one."""
    family = HazardFamily.parse(family)
    t = _as_times(t)
    logH = family.log_hazard(params.log_rate, params.shape_for(family), t)
    return _unwrap(np.exp(logH))


def cumulative_hazard(family: HazardFamily, params: RateShape, t: ArrayLike) -> ArrayLike:
    """Cumulative hazard H(t), with H(0) = 0."""
    family = HazardFamily.parse(family)
    t = _as_times(t)
    return _unwrap(family.cumulative(params.log_rate, params.shape_for(family), t))


def survival(family: HazardFamily, params: RateShape, t: ArrayLike) -> ArrayLike:
    """Survival S(t) = exp(-H(t))."""
    family = HazardFamily.parse(family)
    t = _as_times(t)
    return _unwrap(np.exp(-family.cumulative(params.log_rate, params.shape_for(family), t)))


def sample_time(family: HazardFamily, params: RateShape, u: float) -> float:
    """Inverse-transform draw: the t with S(t) = 1 - u, for u in (0, 1)."""
    family = HazardFamily.parse(family)
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"Uniform variate must lie in (0, 1), got {u}")
    return family.inverse_survival(params.log_rate, params.shape_for(family), u)
