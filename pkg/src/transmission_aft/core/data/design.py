"""
Design matrices for pair-level data.

A formula term is one column name or a ":"-joined product of column names.
Available columns are the raw segment covariates (``<name>_inf`` read from
the source, ``<name>_sus`` read from the subject) and ``zeta``, the external
pair indicator, so ``proph_sus:zeta`` is an external interaction term.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import InconsistentDataError, UnknownCovariateError
from .schema import Outcome, PairRow

logger = logging.getLogger(__name__)

ZETA = "zeta"


def parse_term(term: str) -> Tuple[str, ...]:
    factors = tuple(part.strip() for part in term.split(":") if part.strip())
    if not factors:
        raise UnknownCovariateError(f"Empty formula term '{term}'")
    return factors


def term_value(factors: Sequence[str], covariates: Dict[str, float], zeta: int) -> float:
    value = 1.0
    for name in factors:
        if name == ZETA:
            value *= zeta
        elif name.endswith("_inf") and zeta == 1:
            # external sources carry no infectiousness covariates
            value *= 0.0
        else:
            value *= covariates[name]
    return value


def build_design_matrix(pair_rows: Sequence[PairRow], formula_terms: Sequence[str]) -> "PairDataset":
    """
    Expand raw segment covariates into formula-term vectors.

    Raises:
        UnknownCovariateError: a term names a column no segment carries
    """
    terms = [term.strip() for term in formula_terms]
    parsed = [parse_term(term) for term in terms]
    if len(set(terms)) != len(terms):
        raise UnknownCovariateError(f"Duplicate formula terms in {terms}")

    available = set()
    for row in pair_rows:
        for seg in row.segments:
            available.update(seg.covariates)
    for term, factors in zip(terms, parsed):
        for name in factors:
            if name != ZETA and name not in available:
                raise UnknownCovariateError(
                    f"Unknown covariate '{name}' in term '{term}'"
                    f" (available: {', '.join(sorted(available)) or 'none'})"
                )

    expanded = []
    for row in pair_rows:
        segments = tuple(
            replace(
                seg,
                vector=tuple(term_value(factors, seg.covariates, row.zeta) for factors in parsed),
            )
            for seg in row.segments
        )
        expanded.append(replace(row, segments=segments))

    dataset = PairDataset(expanded, terms)
    _warn_duplicate_columns(dataset)
    return dataset


def _warn_duplicate_columns(dataset: "PairDataset"):
    X = dataset.segX
    for a in range(X.shape[1]):
        for b in range(a + 1, X.shape[1]):
            if np.array_equal(X[:, a], X[:, b]):
                logger.warning(
                    f"Columns '{dataset.terms[a]}' and '{dataset.terms[b]}' are identical"
                )


class PairDataset:
    """
    Pair rows plus compiled arrays for vectorized likelihood evaluation.

    Segment arrays (one entry per segment): segRow, segStart, segStop,
    segZeta, segX. Event arrays (one entry per event row): evRow, evTime,
    evZeta, evX, evGroup. Known events form singleton groups; candidate
    rows of one subject share a group.
    """

    def __init__(self, rows: Sequence[PairRow], terms: Sequence[str]):
        self.rows: Tuple[PairRow, ...] = tuple(rows)
        self.terms: Tuple[str, ...] = tuple(terms)
        self._compile()

    def _compile(self):
        p = len(self.terms)
        segRow, segStart, segStop, segZeta, segX = [], [], [], [], []
        evRow, evTime, evZeta, evX, evGroup = [], [], [], [], []
        candidateGroups: Dict[int, int] = {}
        candidateTimes: Dict[int, float] = {}
        nGroups = 0

        for idx, row in enumerate(self.rows):
            for seg in row.segments:
                if len(seg.vector) != p:
                    raise InconsistentDataError(
                        f"Pair {row.label}: segment vector has {len(seg.vector)} "
                        f"entries for {p} terms; run build_design_matrix first"
                    )
                segRow.append(idx)
                segStart.append(seg.start)
                segStop.append(seg.stop)
                segZeta.append(row.zeta)
                segX.append(seg.vector)

            if row.outcome is Outcome.CENSORED:
                continue
            if row.outcome is Outcome.EVENT_KNOWN:
                group = nGroups
                nGroups += 1
            else:
                calendar = row.event_calendar_time
                if row.subject_id in candidateGroups:
                    if not np.isclose(candidateTimes[row.subject_id], calendar, rtol=0, atol=1e-9):
                        raise InconsistentDataError(
                            f"Pair {row.label}: candidate event time {calendar} differs from "
                            f"{candidateTimes[row.subject_id]} of other candidates"
                        )
                    group = candidateGroups[row.subject_id]
                else:
                    group = nGroups
                    nGroups += 1
                    candidateGroups[row.subject_id] = group
                    candidateTimes[row.subject_id] = calendar
            evRow.append(idx)
            evTime.append(row.event_time)
            evZeta.append(row.zeta)
            # the rate in force at the event is the last segment's
            evX.append(row.segments[-1].vector)
            evGroup.append(group)

        self.segRow = np.asarray(segRow, dtype=int)
        self.segStart = np.asarray(segStart, dtype=float)
        self.segStop = np.asarray(segStop, dtype=float)
        self.segZeta = np.asarray(segZeta, dtype=bool)
        self.segX = np.asarray(segX, dtype=float).reshape(len(segRow), p)
        self.evRow = np.asarray(evRow, dtype=int)
        self.evTime = np.asarray(evTime, dtype=float)
        self.evZeta = np.asarray(evZeta, dtype=bool)
        self.evX = np.asarray(evX, dtype=float).reshape(len(evRow), p)
        self.evGroup = np.asarray(evGroup, dtype=int)
        self.nGroups = nGroups
        self.rowSubject = np.asarray([row.subject_id for row in self.rows], dtype=int)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_events(self) -> int:
        return self.nGroups

    @property
    def has_internal(self) -> bool:
        return bool(np.any(~self.segZeta))

    @property
    def has_external(self) -> bool:
        return bool(np.any(self.segZeta))

    @property
    def has_candidates(self) -> bool:
        return any(row.outcome is Outcome.EVENT_CANDIDATE for row in self.rows)

    def person_time(self, zeta: bool = None) -> float:
        spans = self.segStop - self.segStart
        if zeta is not None:
            spans = spans[self.segZeta == zeta]
        return float(spans.sum())

    def event_count(self, zeta: bool = None) -> int:
        if zeta is None:
            return self.nGroups
        return int(np.count_nonzero(self.evZeta == zeta))

    def subjects(self) -> List[int]:
        return sorted(set(self.rowSubject.tolist()))

    def with_terms(self, terms: Sequence[str]) -> "PairDataset":
        return build_design_matrix(self.rows, terms)

    def rescale_time(self, factor: float) -> "PairDataset":
        """Multiply every time (origins, segments, events) by ``factor``."""
        if not factor > 0:
            raise InconsistentDataError(f"Time scale factor must be positive, got {factor}")
        rows = []
        for row in self.rows:
            segments = tuple(
                replace(seg, start=seg.start * factor, stop=seg.stop * factor)
                for seg in row.segments
            )
            rows.append(
                replace(
                    row,
                    origin=row.origin * factor,
                    segments=segments,
                    event_time=None if row.event_time is None else segments[-1].stop,
                )
            )
        return PairDataset(rows, self.terms)

    def baseline_matrix(self, internal: bool, external: bool) -> Tuple[np.ndarray, List[str]]:
        """Segment design matrix including the baseline indicator columns."""
        columns = [self.segX]
        names = list(self.terms)
        if internal:
            columns.append((~self.segZeta).astype(float)[:, None])
            names.append("ln_lambda0")
        if external:
            columns.append(self.segZeta.astype(float)[:, None])
            names.append("ln_mu0")
        return np.hstack(columns), names


def collinear_columns(dataset: PairDataset, internal: bool, external: bool) -> List[str]:
    """Columns that add nothing to the rank of the columns before them."""
    matrix, names = dataset.baseline_matrix(internal, external)
    if matrix.shape[0] == 0:
        return names
    redundant = []
    kept = np.empty((matrix.shape[0], 0))
    for col, name in zip(matrix.T, names):
        candidate = np.hstack([kept, col[:, None]])
        if np.linalg.matrix_rank(candidate) > kept.shape[1]:
            kept = candidate
        else:
            redundant.append(name)
    return redundant
