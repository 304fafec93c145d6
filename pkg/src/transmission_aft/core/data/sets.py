"""
Exposure and infectious sets.

The exposure set of j holds every source j was exposed to while susceptible;
the infectious set holds the sources that could have caused j's infection.
"""

from typing import FrozenSet, Optional

from ..errors import InconsistentDataError
from .schema import EXTERNAL, ContactStructure, Individual, Population


def exposure_set(
    subject: Individual, population: Population, contacts: ContactStructure
) -> FrozenSet[int]:
    """Sources i with C_ij = 1 whose infectiousness began before t_j, plus 0 if C_0j = 1."""
    sources = set()
    if contacts.has_contact(EXTERNAL, subject.person_id):
        sources.add(EXTERNAL)
    for source in population:
        if source.person_id == subject.person_id or not source.is_infected:
            continue
        if source.onset < subject.infection_time and contacts.has_contact(
            source.person_id, subject.person_id
        ):
            sources.add(source.person_id)
    return frozenset(sources)


def infectious_set(
    subject: Individual,
    population: Population,
    contacts: ContactStructure,
    infector: Optional[int] = None,
) -> FrozenSet[int]:
    """
    Possible infectors of ``subject``.

    Args:
        subject: The person whose infection is explained
        population: All individuals
        contacts: Contact structure
        infector: Known infector id (0 = external), or None when unknown

    Returns:
        {infector} when known; otherwise the sources infectious at t_j, plus
        0 if C_0j = 1. Empty for a never-infected subject.

    Raises:
        InconsistentDataError: infected subject with no possible source
    """
    if not subject.is_infected:
        return frozenset()
    if infector is not None:
        return frozenset({infector})

    tj = subject.infection_time
    sources = set()
    if contacts.has_contact(EXTERNAL, subject.person_id):
        sources.add(EXTERNAL)
    for source in population:
        if source.person_id == subject.person_id or not source.is_infected:
            continue
        if source.onset < tj <= source.removal and contacts.has_contact(
            source.person_id, subject.person_id
        ):
            sources.add(source.person_id)

    if not sources:
        raise InconsistentDataError(
            f"Person {subject.person_id} infected at {tj} has no possible source of infection"
        )
    return frozenset(sources)
