"""
Transmission Data Schema.

Defines the records an epidemic is described with: individuals and their
natural history, who could contact whom, recorded infections, and the
pair-level risk intervals that the likelihood consumes.

Source id 0 is reserved for the external pseudo-source throughout.
"""

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from ..errors import InconsistentDataError

__all__ = [
    "EXTERNAL",
    "Individual",
    "Population",
    "ContactStructure",
    "InfectionRecord",
    "StudyDesign",
    "Outcome",
    "Segment",
    "PairRow",
]

EXTERNAL = 0


@dataclass(frozen=True)
class Individual:
    """
    Natural-history record of one person.

    Attributes:
        person_id: Positive integer id (0 is the external source)
        household_id: Group the person belongs to
        infection_time: Calendar infection time, math.inf if never infected
        latent_period: Time from infection to onset of infectiousness
        infectious_period: Length of the infectious period
        covariates: Baseline covariate values by name
        covariate_changes: Per covariate, (calendar_time, value) steps; the
            value applies strictly after calendar_time
        at_risk_external: C_0j, whether external infection is possible
        entry_time: Calendar start of observation for this person
    """

    person_id: int
    household_id: int
    infection_time: float = math.inf
    latent_period: float = 0.0
    infectious_period: float = 1.0
    covariates: Mapping[str, float] = field(default_factory=dict)
    covariate_changes: Mapping[str, Tuple[Tuple[float, float], ...]] = field(
        default_factory=dict
    )
    at_risk_external: bool = True
    entry_time: float = 0.0

    def __post_init__(self):
        if self.person_id <= 0:
            raise InconsistentDataError(
                f"person_id must be positive (0 is the external source), got {self.person_id}"
            )
        if not self.infectious_period > 0:
            raise InconsistentDataError(
                f"Person {self.person_id}: infectious period must be > 0"
            )
        if not self.latent_period >= 0:
            raise InconsistentDataError(
                f"Person {self.person_id}: latent period must be >= 0"
            )
        for name, steps in self.covariate_changes.items():
            times = [time for time, _ in steps]
            if times != sorted(times):
                raise InconsistentDataError(
                    f"Person {self.person_id}: change points of '{name}' are not sorted"
                )

    @property
    def is_infected(self) -> bool:
        return math.isfinite(self.infection_time)

    @property
    def onset(self) -> float:
        """Onset of infectiousness t_i + eps_i."""
        return self.infection_time + self.latent_period

    @property
    def removal(self) -> float:
        return self.infection_time + self.latent_period + self.infectious_period

    def covariate_at(self, name: str, time: float) -> float:
        """Value in force on an interval that starts at calendar ``time``."""
        value = self.covariates[name]
        steps = self.covariate_changes.get(name, ())
        times = [t for t, _ in steps]
        idx = bisect.bisect_right(times, time)
        if idx > 0:
            value = steps[idx - 1][1]
        return value

    def change_points(self) -> List[float]:
        return sorted({t for steps in self.covariate_changes.values() for t, _ in steps})


class Population:
    """Individuals keyed by id, with household grouping."""

    def __init__(self, individuals: Iterable[Individual]):
        self.individuals: Tuple[Individual, ...] = tuple(
            sorted(individuals, key=lambda person: person.person_id)
        )
        self.by_id: Dict[int, Individual] = {}
        for person in self.individuals:
            if person.person_id in self.by_id:
                raise InconsistentDataError(f"Duplicate person_id {person.person_id}")
            self.by_id[person.person_id] = person

    def __iter__(self) -> Iterator[Individual]:
        return iter(self.individuals)

    def __len__(self) -> int:
        return len(self.individuals)

    def __getitem__(self, personId: int) -> Individual:
        return self.by_id[personId]

    def households(self) -> Dict[int, List[Individual]]:
        groups = defaultdict(list)
        for person in self.individuals:
            groups[person.household_id].append(person)
        return dict(sorted(groups.items()))

    def covariate_names(self) -> List[str]:
        names = []
        for person in self.individuals:
            for name in person.covariates:
                if name not in names:
                    names.append(name)
        return names


@dataclass(frozen=True)
class ContactStructure:
    """
    C_ij for disjoint complete-graph households plus the external node.

    Attributes:
        household_of: person id -> household id
        external: ids of people with C_0j = 1
    """

    household_of: Mapping[int, int]
    external: frozenset

    @classmethod
    def from_population(cls, population: Population) -> "ContactStructure":
        return cls(
            household_of={p.person_id: p.household_id for p in population},
            external=frozenset(p.person_id for p in population if p.at_risk_external),
        )

    def has_contact(self, source: int, subject: int) -> bool:
        if source == EXTERNAL:
            return subject in self.external
        if source == subject:
            return False
        return self.household_of.get(source) == self.household_of.get(subject)


@dataclass(frozen=True)
class InfectionRecord:
    """
    One infection.

    ``infector`` is the source id, 0 for external infection and None when
    the infector is unknown.
    """

    subject_id: int
    infection_time: float
    infector: Optional[int] = None

    @property
    def infector_known(self) -> bool:
        return self.infector is not None


class StudyDesign(str, Enum):
    COMPLETE_COHORT = "complete-cohort"
    CT_DELAYED_ENTRY = "ct-delayed-entry"
    CT_NO_DELAYED_ENTRY = "ct-no-delayed-entry"
    IGNORE_EXTERNAL = "ignore-external"

    @classmethod
    def parse(cls, name) -> "StudyDesign":
        if isinstance(name, StudyDesign):
            return name
        try:
            return cls(str(name).strip().lower().replace("_", "-"))
        except ValueError:
            valid = ", ".join(d.value for d in cls)
            raise InconsistentDataError(f"Unknown study design '{name}' (expected {valid})")

    @property
    def includes_external(self) -> bool:
        return self is not StudyDesign.IGNORE_EXTERNAL

    @property
    def infected_households_only(self) -> bool:
        return self in (StudyDesign.CT_DELAYED_ENTRY, StudyDesign.CT_NO_DELAYED_ENTRY)

    @property
    def delayed_entry(self) -> bool:
        return self is StudyDesign.CT_DELAYED_ENTRY


class Outcome(str, Enum):
    CENSORED = "censored"
    EVENT_KNOWN = "event_known"
    EVENT_CANDIDATE = "event_candidate"


@dataclass(frozen=True)
class Segment:
    """
    Piece of a risk interval with constant covariates, on the pair's local clock.

    ``covariates`` holds raw named columns; ``vector`` is filled in by
    build_design_matrix in formula-term order.
    """

    start: float
    stop: float
    covariates: Mapping[str, float] = field(default_factory=dict)
    vector: Tuple[float, ...] = ()


@dataclass(frozen=True)
class PairRow:
    """
    Risk experience of one ordered pair (source, subject).

    Attributes:
        source_id: Infectious source, 0 for the external pseudo-source
        subject_id: Susceptible subject
        origin: Calendar time of the local clock's zero
        segments: Contiguous (start, stop] pieces on the local clock
        outcome: Censored, known event, or candidate event
        event_time: Local time of the subject's infection for events
        household_id: Household of the subject
    """

    source_id: int
    subject_id: int
    origin: float
    segments: Tuple[Segment, ...]
    outcome: Outcome = Outcome.CENSORED
    event_time: Optional[float] = None
    household_id: int = 0

    def __post_init__(self):
        if not self.segments:
            raise InconsistentDataError(f"Pair {self.label}: no risk segments")
        # an infection exactly at the local origin leaves a single [t, t] segment
        degenerate = (
            len(self.segments) == 1
            and self.outcome is not Outcome.CENSORED
            and self.segments[0].start == self.segments[0].stop
        )
        previous = None
        for seg in self.segments:
            if not (0 <= seg.start < seg.stop or (degenerate and seg.start >= 0)):
                raise InconsistentDataError(
                    f"Pair {self.label}: invalid segment ({seg.start}, {seg.stop}]"
                )
            if previous is not None and seg.start != previous:
                raise InconsistentDataError(f"Pair {self.label}: segments are not contiguous")
            previous = seg.stop
        if self.outcome is Outcome.CENSORED:
            if self.event_time is not None:
                raise InconsistentDataError(f"Pair {self.label}: censored row with event time")
        elif self.event_time is None or self.event_time != self.stop:
            raise InconsistentDataError(
                f"Pair {self.label}: event time {self.event_time} is not the end of the risk interval"
            )

    @property
    def label(self) -> str:
        return f"({self.source_id}->{self.subject_id})"

    @property
    def zeta(self) -> int:
        return 1 if self.source_id == EXTERNAL else 0

    @property
    def start(self) -> float:
        return self.segments[0].start

    @property
    def stop(self) -> float:
        return self.segments[-1].stop

    @property
    def is_event(self) -> bool:
        return self.outcome is not Outcome.CENSORED

    @property
    def risk_time(self) -> float:
        return self.stop - self.start

    @property
    def event_calendar_time(self) -> Optional[float]:
        return None if self.event_time is None else self.origin + self.event_time
