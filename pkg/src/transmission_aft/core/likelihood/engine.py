"""
Pairwise log-likelihood.

Each segment contributes minus its cumulative-hazard increment under the
segment's rate, with the pair's local clock never reset at segment bounds.
Each infection contributes the log hazard of its infector's row when the
infector is known, or the log of the total hazard over the candidate rows
otherwise. Internal rows (zeta = 0) use the internal family and shape,
external rows (zeta = 1) the external ones.

Evaluation is vectorized over the compiled arrays of a PairDataset. Subjects
can be split into partitions that are evaluated on a thread pool; partition
sums are always added in partition order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from ..data.design import PairDataset, parse_term, term_value
from ..data.schema import Outcome, PairRow
from ..errors import InconsistentDataError, LikelihoodEvaluationError, UnknownCovariateError
from ..hazards import HazardFamily
from .params import ModelSpec, ParamSet

logger = logging.getLogger(__name__)

ParamLike = Union[ParamSet, Sequence[float], np.ndarray]


def _family_and_shape(zeta: int, params: ParamSet, spec: ModelSpec):
    if zeta:
        if not spec.has_external:
            raise InconsistentDataError("External pair row under a model without external family")
        return spec.external_family, params.gamma_ext if spec.external_shape else 1.0
    if not spec.has_internal:
        raise InconsistentDataError("Internal pair row under a model without internal family")
    return spec.internal_family, params.gamma_int if spec.internal_shape else 1.0


def _baseline(zeta: int, params: ParamSet) -> float:
    value = params.ln_mu0 if zeta else params.ln_lambda0
    if value is None:
        name = "ln_mu0" if zeta else "ln_lambda0"
        raise LikelihoodEvaluationError(f"Parameter {name} is required for this row")
    return float(value)


def _segment_vector(row: PairRow, segIndex: int, terms: Sequence[str]) -> np.ndarray:
    seg = row.segments[segIndex]
    if len(seg.vector) == len(terms):
        return np.asarray(seg.vector, dtype=float)
    try:
        return np.asarray(
            [term_value(parse_term(term), seg.covariates, row.zeta) for term in terms],
            dtype=float,
        )
    except KeyError as e:
        raise UnknownCovariateError(f"Pair {row.label}: no covariate {e} for the model terms")


def _log_rate(row: PairRow, vector: np.ndarray, params: ParamSet, terms: Sequence[str]) -> float:
    beta = params.beta_vector(terms)
    return float(vector @ beta) + _baseline(row.zeta, params)


def pair_rate(
    row: PairRow,
    segment_covariates: Union[Mapping[str, float], Sequence[float]],
    params: ParamSet,
) -> float:
    """
    Rate exp(beta.X + (1 - zeta) ln_lambda0 + zeta ln_mu0) of one segment.

    ``segment_covariates`` is either a mapping from term to value or a
    vector in the order of ``params.beta``.
    """
    terms = list(params.beta)
    if isinstance(segment_covariates, Mapping):
        unknown = [name for name in segment_covariates if name not in params.beta]
        if unknown:
            raise UnknownCovariateError(f"No coefficient for covariate(s): {', '.join(unknown)}")
        vector = np.asarray([segment_covariates.get(t, 0.0) for t in terms], dtype=float)
    else:
        vector = np.asarray(segment_covariates, dtype=float)
        if vector.shape != (len(terms),):
            raise UnknownCovariateError(
                f"Covariate vector has {vector.size} entries for {len(terms)} coefficients"
            )
    return float(np.exp(_log_rate(row, vector, params, terms)))


def _row_cumulative(row: PairRow, params: ParamSet, spec: ModelSpec) -> float:
    family, shape = _family_and_shape(row.zeta, params, spec)
    total = 0.0
    for idx, seg in enumerate(row.segments):
        logRate = _log_rate(row, _segment_vector(row, idx, spec.terms), params, spec.terms)
        bounds = np.asarray([seg.start, seg.stop])
        H = family.cumulative(logRate, shape, bounds)
        total += float(H[1] - H[0])
    return total


def _row_log_hazard(row: PairRow, params: ParamSet, spec: ModelSpec) -> float:
    family, shape = _family_and_shape(row.zeta, params, spec)
    logRate = _log_rate(
        row, _segment_vector(row, len(row.segments) - 1, spec.terms), params, spec.terms
    )
    value = float(family.log_hazard(logRate, shape, np.asarray(row.event_time, dtype=float)))
    if value == math.inf:
        raise LikelihoodEvaluationError(
            f"Pair {row.label}: infinite log hazard at local time {row.event_time}"
        )
    return value


def loglik_row_observed(row: PairRow, params: ParamSet, spec: ModelSpec) -> float:
    """Censoring term of one row, plus its log hazard for a known event."""
    if row.outcome is Outcome.EVENT_CANDIDATE:
        raise InconsistentDataError(
            f"Pair {row.label}: candidate event rows need loglik_individual_unobserved"
        )
    value = -_row_cumulative(row, params, spec)
    if row.outcome is Outcome.EVENT_KNOWN:
        value += _row_log_hazard(row, params, spec)
    return value


def total_hazard_at_event(
    candidate_rows: Sequence[PairRow], params: ParamSet, spec: ModelSpec
) -> float:
    """Sum of the candidate rows' hazards at the subject's infection time."""
    rows = [row for row in candidate_rows if row.is_event]
    if not rows:
        raise InconsistentDataError("No candidate rows to sum the hazard over")
    subjects = {row.subject_id for row in rows}
    if len(subjects) > 1:
        raise InconsistentDataError(f"Candidate rows span several subjects: {sorted(subjects)}")
    times = [row.event_calendar_time for row in rows]
    if max(times) - min(times) > 1e-9:
        raise InconsistentDataError(
            f"Candidate rows of subject {rows[0].subject_id} disagree on the infection time"
        )
    return float(sum(math.exp(_row_log_hazard(row, params, spec)) for row in rows))


def loglik_individual_unobserved(
    rows: Sequence[PairRow], params: ParamSet, spec: ModelSpec
) -> float:
    """
    Contribution of one subject when the infector is not observed.

    A single event row contributes its log hazard directly, so a subject
    with a one-source infectious set scores exactly as in the observed case.
    """
    value = -sum(_row_cumulative(row, params, spec) for row in rows)
    events = [row for row in rows if row.is_event]
    if len(events) == 1:
        value += _row_log_hazard(events[0], params, spec)
    elif events:
        total = total_hazard_at_event(events, params, spec)
        if total <= 0.0:
            return -math.inf
        value += math.log(total)
    return value


class LikelihoodEngine:
    """
    Vectorized log-likelihood over one PairDataset.

    Args:
        dataset: Compiled pair dataset whose terms match the model's
        spec: Families and formula terms
        partitions: Number of subject partitions (default: one per worker)
        workers: Threads evaluating partitions
    """

    def __init__(
        self,
        dataset: PairDataset,
        spec: ModelSpec,
        partitions: Optional[int] = None,
        workers: int = 1,
    ):
        if tuple(dataset.terms) != tuple(spec.terms):
            raise UnknownCovariateError(
                f"Dataset terms {list(dataset.terms)} do not match model terms {list(spec.terms)}"
            )
        if dataset.has_external and not spec.has_external:
            raise InconsistentDataError(
                "Dataset has external rows; build it with the ignore-external design "
                "to fit a model without external family"
            )
        if dataset.has_internal and not spec.has_internal:
            raise InconsistentDataError("Dataset has internal rows but the model has none")
        self.dataset = dataset
        self.spec = spec
        self.workers = max(1, int(workers))
        self.partitions = max(1, int(partitions or self.workers))
        self._chunks = self._partition()

    def _partition(self) -> List[Dict[str, np.ndarray]]:
        ds = self.dataset
        subjects = ds.subjects()
        if not subjects:
            return []
        nChunks = min(self.partitions, len(subjects))
        chunkOf = {
            subject: idx
            for idx, block in enumerate(np.array_split(np.asarray(subjects), nChunks))
            for subject in block.tolist()
        }
        segChunk = np.asarray([chunkOf[s] for s in ds.rowSubject[ds.segRow]], dtype=int)
        evChunk = np.asarray([chunkOf[s] for s in ds.rowSubject[ds.evRow]], dtype=int)

        chunks = []
        for idx in range(nChunks):
            segIdx = np.flatnonzero(segChunk == idx)
            evIdx = np.flatnonzero(evChunk == idx)
            groups, localGroup = np.unique(ds.evGroup[evIdx], return_inverse=True)
            counts = np.bincount(localGroup, minlength=len(groups))
            chunks.append(
                {
                    "seg": segIdx,
                    "ev": evIdx,
                    "group": localGroup,
                    "nGroups": len(groups),
                    "single": counts[localGroup] == 1,
                    "multi": counts > 1,
                }
            )
        return chunks

    def params_from(self, params: ParamLike) -> ParamSet:
        if isinstance(params, ParamSet):
            # raises on any parameter the model needs but params lack
            params.to_vector(self.spec)
            return params
        return ParamSet.from_vector(self.spec, np.asarray(params, dtype=float))

    def _shapes(self, params: ParamSet):
        gammaInt = params.gamma_int if self.spec.internal_shape else 1.0
        gammaExt = params.gamma_ext if self.spec.external_shape else 1.0
        return gammaInt, gammaExt

    def _log_rates(self, X: np.ndarray, zeta: np.ndarray, params: ParamSet) -> np.ndarray:
        beta = params.beta_vector(self.spec.terms)
        lnLambda0 = params.ln_lambda0 if self.spec.has_internal else 0.0
        lnMu0 = params.ln_mu0 if self.spec.has_external else 0.0
        return X @ beta + np.where(zeta, lnMu0, lnLambda0)

    def _cumulative(self, logRate, zeta, t, gammaInt, gammaExt) -> np.ndarray:
        values = np.zeros_like(t)
        internal = ~zeta
        if np.any(internal):
            values[internal] = self.spec.internal_family.cumulative(
                logRate[internal], gammaInt, t[internal]
            )
        if np.any(zeta):
            values[zeta] = self.spec.external_family.cumulative(
                logRate[zeta], gammaExt, t[zeta]
            )
        return values

    def _log_hazard(self, logRate, zeta, t, gammaInt, gammaExt) -> np.ndarray:
        values = np.zeros_like(t)
        internal = ~zeta
        if np.any(internal):
            values[internal] = self.spec.internal_family.log_hazard(
                logRate[internal], gammaInt, t[internal]
            )
        if np.any(zeta):
            values[zeta] = self.spec.external_family.log_hazard(
                logRate[zeta], gammaExt, t[zeta]
            )
        return values

    def _evaluate_chunk(self, chunk: Dict[str, np.ndarray], params: ParamSet) -> float:
        ds = self.dataset
        gammaInt, gammaExt = self._shapes(params)

        seg = chunk["seg"]
        zeta = ds.segZeta[seg]
        logRate = self._log_rates(ds.segX[seg], zeta, params)
        increments = self._cumulative(
            logRate, zeta, ds.segStop[seg], gammaInt, gammaExt
        ) - self._cumulative(logRate, zeta, ds.segStart[seg], gammaInt, gammaExt)
        total = -float(np.sum(increments))

        ev = chunk["ev"]
        if ev.size == 0:
            return total
        evZeta = ds.evZeta[ev]
        logH = self._log_hazard(
            self._log_rates(ds.evX[ev], evZeta, params), evZeta, ds.evTime[ev], gammaInt, gammaExt
        )
        if np.any(np.isposinf(logH)):
            row = ds.rows[ds.evRow[ev[np.flatnonzero(np.isposinf(logH))[0]]]]
            raise LikelihoodEvaluationError(
                f"Pair {row.label}: infinite log hazard at local time {row.event_time}"
            )

        single = chunk["single"]
        total += float(np.sum(logH[single]))
        if np.any(chunk["multi"]):
            with np.errstate(over="ignore"):
                sums = np.bincount(
                    chunk["group"][~single],
                    weights=np.exp(logH[~single]),
                    minlength=chunk["nGroups"],
                )[chunk["multi"]]
            if np.any(sums <= 0.0):
                return -math.inf
            total += float(np.sum(np.log(sums)))
        return total

    def loglik(self, params: ParamLike) -> float:
        """Total log-likelihood; -inf when some infection has zero total hazard."""
        params = self.params_from(params)
        if not self._chunks:
            return 0.0
        if self.workers > 1 and len(self._chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda c: self._evaluate_chunk(c, params), self._chunks))
        else:
            parts = [self._evaluate_chunk(chunk, params) for chunk in self._chunks]

        total = 0.0
        for part in parts:
            total += part
        if math.isnan(total):
            raise LikelihoodEvaluationError(f"Log-likelihood is NaN at {params.to_dict()}")
        return total

    __call__ = loglik


def loglik_total(
    dataset: PairDataset,
    params: ParamLike,
    spec: ModelSpec,
    partitions: Optional[int] = None,
    workers: int = 1,
) -> float:
    """Sum of the log-likelihood contributions of every subject in ``dataset``."""
    return LikelihoodEngine(dataset, spec, partitions=partitions, workers=workers).loglik(params)
