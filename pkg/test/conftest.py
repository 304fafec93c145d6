"""Basic pytest fixtures for unit tests."""

import pytest
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from transmission_aft.core.config import Config  # noqa: E402
from transmission_aft.core.data import (  # noqa: E402
    ContactStructure,
    Individual,
    InfectionRecord,
    Outcome,
    PairRow,
    Population,
    Segment,
)


@pytest.fixture
def temp_dir(tmp_path):
    """Create temporary directory for tests."""
    return tmp_path


@pytest.fixture
def config():
    """Config with every section at its defaults."""
    return Config.from_dict({})


@pytest.fixture
def two_person_household():
    """Household {a=1, b=2}; a infected externally at 0 (eps=0, iota=1); b never infected."""
    population = Population(
        [
            Individual(person_id=1, household_id=1, infection_time=0.0, infectious_period=1.0),
            Individual(person_id=2, household_id=1, infectious_period=1.0),
        ]
    )
    contacts = ContactStructure.from_population(population)
    infections = [InfectionRecord(1, 0.0, 0)]
    return population, contacts, infections


@pytest.fixture
def make_row():
    """Factory for single-segment pair rows with optional raw covariates."""

    def _make(source, subject, stop, start=0.0, origin=0.0, outcome=Outcome.CENSORED, covariates=None):
        return PairRow(
            source_id=source,
            subject_id=subject,
            origin=origin,
            segments=(Segment(start=start, stop=stop, covariates=dict(covariates or {})),),
            outcome=outcome,
            event_time=None if outcome is Outcome.CENSORED else stop,
        )

    return _make


@pytest.fixture
def external_events(make_row):
    """Factory: D external-only subjects, each infected at T / D, so person-time is T."""

    def _make(events, personTime):
        return [
            make_row(0, subject, personTime / events, outcome=Outcome.EVENT_KNOWN)
            for subject in range(1, events + 1)
        ]

    return _make


@pytest.fixture
def household_study_csv(tmp_path):
    """Ten four-person households: eight with an index case, four of those with a secondary case."""
    lines = ["household_id,person_id,onset_day,adult,proph"]
    personId = 0
    for household in range(1, 11):
        for position in range(4):
            personId += 1
            onset = ""
            if household <= 8 and position == 0:
                onset = str(10 + household)
            elif household <= 8 and household % 2 == 1 and position == 1:
                onset = str(13 + household)
            adult = 1 if position < 2 else 0
            proph = 1 if household % 2 == 0 and position > 0 else 0
            lines.append(f"{household},{personId},{onset},{adult},{proph}")
    path = tmp_path / "study_households.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
