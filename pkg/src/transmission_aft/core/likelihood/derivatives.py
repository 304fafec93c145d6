"""
Central finite-difference gradient and Hessian.

Steps are relative: h_k = step * max(1, |theta_k|). The Hessian diagonal uses
the three-point second difference and the off-diagonal entries the
four-point cross difference; the result is symmetrized.
"""

from typing import Callable, Optional

import numpy as np

from ..data.design import PairDataset
from ..errors import LikelihoodEvaluationError
from .engine import LikelihoodEngine, ParamLike
from .params import ModelSpec

GRADIENT_STEP = 1e-5
HESSIAN_STEP = 1e-5

Objective = Callable[[np.ndarray], float]


def _steps(theta: np.ndarray, step: float) -> np.ndarray:
    return step * np.maximum(1.0, np.abs(theta))


def _probe(f: Objective, theta: np.ndarray) -> float:
    value = f(theta)
    if not np.isfinite(value):
        raise LikelihoodEvaluationError(f"Non-finite objective {value} at probe point {theta}")
    return value


def numeric_gradient(f: Objective, theta, step: float = GRADIENT_STEP) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    h = _steps(theta, step)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        up = theta.copy()
        up[k] += h[k]
        down = theta.copy()
        down[k] -= h[k]
        grad[k] = (_probe(f, up) - _probe(f, down)) / (2.0 * h[k])
    return grad


def numeric_hessian(f: Objective, theta, step: float = HESSIAN_STEP) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    h = _steps(theta, step)
    center = _probe(f, theta)
    res = np.zeros((n, n))

    for i in range(n):
        up = theta.copy()
        up[i] += h[i]
        down = theta.copy()
        down[i] -= h[i]
        res[i, i] = (_probe(f, up) - 2.0 * center + _probe(f, down)) / (h[i] * h[i])

    for i, j in zip(*np.triu_indices(n, k=1)):
        corners = []
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            x = theta.copy()
            x[i] += si * h[i]
            x[j] += sj * h[j]
            corners.append(_probe(f, x))
        res[i, j] = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * h[i] * h[j])
        res[j, i] = res[i, j]

    return (res + res.T) / 2.0


def gradient(
    dataset: PairDataset,
    params: ParamLike,
    spec: ModelSpec,
    step: float = GRADIENT_STEP,
    engine: Optional[LikelihoodEngine] = None,
) -> np.ndarray:
    """Gradient of loglik_total in parameter_names() order."""
    engine = engine or LikelihoodEngine(dataset, spec)
    return numeric_gradient(engine.loglik, engine.params_from(params).to_vector(spec), step)


def hessian(
    dataset: PairDataset,
    params: ParamLike,
    spec: ModelSpec,
    step: float = HESSIAN_STEP,
    engine: Optional[LikelihoodEngine] = None,
) -> np.ndarray:
    """Symmetric Hessian of loglik_total in parameter_names() order."""
    engine = engine or LikelihoodEngine(dataset, spec)
    return numeric_hessian(engine.loglik, engine.params_from(params).to_vector(spec), step)
