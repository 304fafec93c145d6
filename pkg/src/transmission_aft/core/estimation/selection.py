"""
Backward model selection by AIC.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from ..config.config import FittingConfig
from ..data.design import PairDataset
from ..errors import TransmissionError
from ..likelihood import ModelSpec
from .fitting import FitResult, fit_mle

logger = logging.getLogger(__name__)


@dataclass
class SelectionStep:
    """One round of backward selection: every candidate drop and its AIC."""

    current_terms: Tuple[str, ...]
    current_aic: float
    candidates: List[dict] = field(default_factory=list)
    dropped: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "current_terms": list(self.current_terms),
            "current_aic": self.current_aic,
            "candidates": list(self.candidates),
            "dropped": self.dropped,
        }


def backward_select(
    dataset: PairDataset,
    spec: ModelSpec,
    protected_terms: Sequence[str] = (),
    options: Optional[FittingConfig] = None,
) -> Tuple[ModelSpec, FitResult, List[SelectionStep]]:
    """
    Drop terms one at a time while doing so lowers AIC.

    Each round fits the model without each unprotected term and drops the
    one giving the lowest AIC, provided it beats the current model. Ties go
    to the term earliest in the formula. Candidates that fail to fit or do
    not converge are skipped with a warning. Baseline and shape parameters
    are never candidates.

    Returns:
        (final spec, its fit with intervals, trace of every round)
    """
    options = options or FittingConfig()
    protected = set(protected_terms)
    unknown = protected - set(spec.terms)
    if unknown:
        raise TransmissionError(f"Protected term(s) not in the model: {', '.join(sorted(unknown))}")

    current = spec
    currentFit = fit_mle(dataset.with_terms(current.terms), current, options, lr_intervals=False, p_values="none")
    trace: List[SelectionStep] = []

    while True:
        step = SelectionStep(current_terms=current.terms, current_aic=currentFit.aic)
        best = None
        for term in current.terms:
            if term in protected:
                continue
            reduced = current.with_terms([t for t in current.terms if t != term])
            try:
                fit = fit_mle(
                    dataset.with_terms(reduced.terms), reduced, options,
                    lr_intervals=False, p_values="none",
                )
            except TransmissionError as e:
                logger.warning(f"Skipping removal of '{term}': {e}")
                step.candidates.append({"term": term, "aic": None, "status": "failed"})
                continue
            if not fit.converged:
                logger.warning(f"Skipping removal of '{term}': fit did not converge")
                step.candidates.append({"term": term, "aic": fit.aic, "status": "nonconverged"})
                continue
            step.candidates.append({"term": term, "aic": fit.aic, "status": "ok"})
            # strict comparison keeps the earliest term on ties
            if best is None or fit.aic < best[2].aic:
                best = (term, reduced, fit)

        trace.append(step)
        if best is None or not best[2].aic < currentFit.aic:
            break
        step.dropped = best[0]
        logger.info(f"Dropped '{best[0]}': AIC {currentFit.aic:.3f} -> {best[2].aic:.3f}")
        current, currentFit = best[1], best[2]

    final = fit_mle(dataset.with_terms(current.terms), current, options)
    logger.info(f"Selected terms: {list(current.terms) or 'none'} (AIC {final.aic:.3f})")
    return current, final, trace
