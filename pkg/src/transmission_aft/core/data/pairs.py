"""
Pair-row construction.

Turns natural-history data into one risk interval per ordered pair (i, j)
under a chosen study design. Internal pairs run on the infectious age of i;
external pairs (source 0) run on the common calendar origin 0.
"""

import logging
import math
from collections import defaultdict
from dataclasses import replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

from ..errors import InconsistentDataError
from .schema import (
    EXTERNAL,
    ContactStructure,
    Individual,
    InfectionRecord,
    Outcome,
    PairRow,
    Population,
    Segment,
    StudyDesign,
)
from .sets import infectious_set

logger = logging.getLogger(__name__)

EXTERNAL_ORIGIN = 0.0


def build_pair_rows(
    population: Population,
    contacts: ContactStructure,
    infections: Iterable[InfectionRecord],
    design: Union[StudyDesign, str],
    wiw_observed: bool,
    followup_end: Union[float, Mapping[int, float]],
    covariate_names: Optional[Sequence[str]] = None,
) -> List[PairRow]:
    """
    Build the pair-level risk dataset for one study design.

    Args:
        population: Individuals with natural-history times
        contacts: Contact structure (households plus external node)
        infections: Infection records; infectors may be unknown (None)
        design: Study design deciding which external rows exist
        wiw_observed: Whether every infector is known
        followup_end: Stopping time T, either global or per household id
        covariate_names: Covariates carried into segments (default: all)

    Returns:
        Pair rows ordered by household, subject, then source

    Raises:
        InconsistentDataError: records contradict each other, an event falls
            outside its pair's risk interval, or an infected subject has no
            at-risk source row
    """
    design = StudyDesign.parse(design)
    names = list(covariate_names) if covariate_names is not None else population.covariate_names()
    records = _index_records(population, infections)

    allRows: List[PairRow] = []
    skippedHouseholds = 0
    for householdId, members in population.households().items():
        householdEnd = _followup_for(followup_end, householdId)
        indexTime = min((m.infection_time for m in members), default=math.inf)

        if design.infected_households_only and not indexTime <= householdEnd:
            skippedHouseholds += 1
            continue

        householdPop = Population(members)
        for subject in members:
            entry = indexTime if design.delayed_entry else subject.entry_time
            rows = _rows_for_subject(
                subject, members, contacts, design, entry, householdEnd, names
            )
            rows = _code_outcome(
                subject,
                rows,
                householdPop,
                contacts,
                records.get(subject.person_id),
                design,
                wiw_observed,
                entry,
                householdEnd,
                names,
            )
            allRows.extend(sorted(rows, key=lambda r: r.source_id))

    logger.info(
        f"Built {len(allRows)} pair rows ({design.value}, "
        f"wiw {'observed' if wiw_observed else 'unobserved'}); "
        f"{skippedHouseholds} household(s) without infection excluded"
    )
    return allRows


def _index_records(
    population: Population, infections: Iterable[InfectionRecord]
) -> Dict[int, InfectionRecord]:
    records = {}
    for record in infections:
        if record.subject_id not in population.by_id:
            raise InconsistentDataError(
                f"Infection record for unknown person {record.subject_id}"
            )
        person = population[record.subject_id]
        if person.infection_time != record.infection_time:
            raise InconsistentDataError(
                f"Person {record.subject_id}: record time {record.infection_time} "
                f"differs from natural history {person.infection_time}"
            )
        records[record.subject_id] = record
    return records


def _followup_for(followup_end, householdId: int) -> float:
    if isinstance(followup_end, Mapping):
        return float(followup_end[householdId])
    return float(followup_end)


def _rows_for_subject(
    subject: Individual,
    members: List[Individual],
    contacts: ContactStructure,
    design: StudyDesign,
    entry: float,
    householdEnd: float,
    names: Sequence[str],
) -> List[PairRow]:
    """Censored risk rows for every source of ``subject``."""
    rows = []
    # susceptible through t_j inclusive, observed through T inclusive
    subjectEnd = min(subject.infection_time, householdEnd)

    if design.includes_external and contacts.has_contact(EXTERNAL, subject.person_id):
        if subjectEnd > entry:
            rows.append(
                _make_row(None, subject, EXTERNAL_ORIGIN, entry, subjectEnd, names)
            )

    for source in members:
        if source.person_id == subject.person_id or not source.is_infected:
            continue
        if not contacts.has_contact(source.person_id, subject.person_id):
            continue
        start = max(source.onset, entry)
        stop = min(source.removal, subjectEnd)
        if stop > start:
            rows.append(_make_row(source, subject, source.onset, start, stop, names))
    return rows


def _make_row(
    source: Optional[Individual],
    subject: Individual,
    origin: float,
    calendarStart: float,
    calendarStop: float,
    names: Sequence[str],
    outcome: Outcome = Outcome.CENSORED,
) -> PairRow:
    cuts = set(subject.change_points())
    if source is not None:
        cuts.update(source.change_points())
    bounds = [calendarStart] + sorted(c for c in cuts if calendarStart < c < calendarStop)
    bounds.append(calendarStop)

    segments = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        covariates = {}
        for name in names:
            covariates[f"{name}_inf"] = (
                0.0 if source is None else float(source.covariate_at(name, lo))
            )
            covariates[f"{name}_sus"] = float(subject.covariate_at(name, lo))
        segments.append(Segment(start=lo - origin, stop=hi - origin, covariates=covariates))

    return PairRow(
        source_id=EXTERNAL if source is None else source.person_id,
        subject_id=subject.person_id,
        origin=origin,
        segments=tuple(segments),
        outcome=outcome,
        event_time=None if outcome is Outcome.CENSORED else segments[-1].stop,
        household_id=subject.household_id,
    )


def _code_outcome(
    subject: Individual,
    rows: List[PairRow],
    householdPop: Population,
    contacts: ContactStructure,
    record: Optional[InfectionRecord],
    design: StudyDesign,
    wiw_observed: bool,
    entry: float,
    householdEnd: float,
    names: Sequence[str],
) -> List[PairRow]:
    tj = subject.infection_time
    if not subject.is_infected or tj > householdEnd:
        return rows
    if tj < entry or (tj == entry and design.delayed_entry):
        # infected before follow-up began
        return rows

    infector = record.infector if record is not None else None
    if wiw_observed and infector is None:
        raise InconsistentDataError(
            f"Person {subject.person_id}: infector unknown but WIW is marked observed"
        )
    outcome = Outcome.EVENT_KNOWN if wiw_observed else Outcome.EVENT_CANDIDATE
    externalRow = design.includes_external and contacts.has_contact(
        EXTERNAL, subject.person_id
    )

    if tj == entry:
        # infection at the time origin: only the external source can be at risk
        if externalRow and infector in (None, EXTERNAL):
            return rows + [
                _make_row(None, subject, EXTERNAL_ORIGIN, tj, tj, names, outcome=outcome)
            ]
        if not design.includes_external:
            return rows
        raise InconsistentDataError(
            f"Pair ({infector}->{subject.person_id}): infection at {tj} lies at the "
            f"start of follow-up with no external risk"
        )

    sources = infectious_set(subject, householdPop, contacts, infector=infector)
    # a row is still at risk at t_j when its calendar stop is t_j
    atRisk = [
        idx
        for idx, row in enumerate(rows)
        if row.source_id in sources
        and (row.source_id == EXTERNAL or householdPop[row.source_id].removal >= tj)
    ]

    if not atRisk:
        if not design.includes_external and infector in (None, EXTERNAL):
            # attributed to an excluded external source
            logger.debug(f"Person {subject.person_id}: no internal source at risk, no event")
            return rows
        label = f"({infector}->{subject.person_id})" if infector is not None else (
            f"(?->{subject.person_id})"
        )
        raise InconsistentDataError(
            f"Pair {label}: infection at {tj} lies outside every at-risk pair interval"
        )

    coded = list(rows)
    for idx in atRisk:
        row = coded[idx]
        coded[idx] = replace(row, outcome=outcome, event_time=row.stop)
    return coded


def index_cases(population: Population) -> Dict[int, List[int]]:
    """Per household, ids of the people sharing the earliest infection time."""
    result = defaultdict(list)
    for householdId, members in population.households().items():
        first = min((m.infection_time for m in members), default=math.inf)
        if math.isfinite(first):
            result[householdId] = [m.person_id for m in members if m.infection_time == first]
    return dict(result)
