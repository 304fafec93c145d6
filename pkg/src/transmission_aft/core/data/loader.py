"""
File formats: household CSV ingestion, pair-row CSV, simulation output,
SAR profiles and fit JSON.

All CSVs are comma-separated UTF-8 with a header row. Floats are written
with full precision and read back with pandas' round-trip parser, so a
pair-row file reloads to identical numbers.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import BaseModel, Field, FiniteFloat, ValidationError, field_validator

from ..config.config import NaturalHistoryConfig
from ..errors import SchemaError, TransmissionError
from .pairs import index_cases
from .schema import (
    EXTERNAL,
    ContactStructure,
    Individual,
    InfectionRecord,
    Outcome,
    PairRow,
    Population,
    Segment,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PAIR_COLUMNS = [
    "source_id",
    "subject_id",
    "zeta",
    "origin",
    "seg_start",
    "seg_stop",
    "outcome",
    "event_time",
    "household_id",
]
HOUSEHOLD_COLUMNS = ["household_id", "person_id", "onset_day"]
START_DAY_SUFFIX = "_start_day"


def _read_csv(path: PathLike, required: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaError(f"Cannot read {path}: {e}") from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


class HouseholdRow(BaseModel):
    """One line of the household CSV."""

    household_id: int
    person_id: int = Field(..., gt=0)
    onset_day: Optional[float] = Field(default=None, ge=0)


class ProfileRow(BaseModel):
    """One line of the SAR profiles CSV; blank covariate cells are left out."""

    role: Literal["source", "subject"]
    label: str = Field(..., min_length=1)
    covariates: Dict[str, FiniteFloat] = Field(default_factory=dict)

    @field_validator("role", mode="before")
    @classmethod
    def _normalize_role(cls, value):
        return str(value).strip().lower()


@dataclass
class HouseholdData:
    """Natural-history data ingested from a household CSV."""

    population: Population
    infections: List[InfectionRecord]
    followup_end: Dict[int, float]
    covariates: List[str]
    excluded_households: List[int] = field(default_factory=list)

    @property
    def contacts(self) -> ContactStructure:
        return ContactStructure.from_population(self.population)


def load_households(
    path: PathLike,
    natural_history: Optional[NaturalHistoryConfig] = None,
    covariates: Optional[Sequence[str]] = None,
) -> HouseholdData:
    """
    Ingest a household CSV.

    Onset days become infection times by subtracting the incubation period;
    study time 0 lies studyStartDays before the earliest infection time, so
    every infection falls strictly inside external follow-up. The earliest
    infections of each household are index cases, recorded as externally
    infected.
    Households with a missing covariate cell are excluded whole.

    A column ``<c>_start_day`` gives the day treatment c starts for that
    person. A covariate named in timeDependentCovariates without such a
    column switches on treatmentLagDays after the household's index onset
    for people flagged 1.

    Raises:
        SchemaError: missing columns, bad values or duplicate person ids
    """
    nh = natural_history or NaturalHistoryConfig()
    frame = _read_csv(path, HOUSEHOLD_COLUMNS)
    if frame["person_id"].duplicated().any():
        dupes = frame.loc[frame["person_id"].duplicated(), "person_id"].tolist()
        raise SchemaError(f"{path}: duplicate person_id {dupes}")

    startColumns = {c[: -len(START_DAY_SUFFIX)]: c for c in frame.columns if c.endswith(START_DAY_SUFFIX)}
    names = list(covariates) if covariates is not None else [
        c for c in frame.columns if c not in HOUSEHOLD_COLUMNS and not c.endswith(START_DAY_SUFFIX)
    ]
    names += [name for name in startColumns if name not in names]
    for name in names:
        if name not in frame.columns and name not in startColumns:
            raise SchemaError(f"{path}: no column for covariate '{name}'")

    rows = []
    for lineNo, record in enumerate(frame.to_dict("records"), start=2):
        try:
            rows.append(
                HouseholdRow(
                    household_id=record["household_id"],
                    person_id=record["person_id"],
                    onset_day=None if pd.isna(record["onset_day"]) else record["onset_day"],
                )
            )
        except ValidationError as e:
            raise SchemaError(f"{path} line {lineNo}: {e.errors()[0]['msg']}") from e

    # complete-case analysis at household level
    valueColumns = [n for n in names if n in frame.columns]
    incomplete = frame.loc[frame[valueColumns].isna().any(axis=1), "household_id"] if valueColumns else []
    excluded = sorted(set(int(h) for h in incomplete))
    if excluded:
        logger.warning(
            f"Excluded {len(excluded)} household(s) with missing covariates: {excluded}"
        )

    infectionDay = {
        row.person_id: row.onset_day - nh.incubationDays
        for row in rows
        if row.onset_day is not None and row.household_id not in excluded
    }
    if not infectionDay:
        raise SchemaError(f"{path}: no infections in the included households")
    # external hazards are never evaluated at local time 0
    origin = min(infectionDay.values()) - nh.studyStartDays

    byHousehold: Dict[int, List[Tuple[HouseholdRow, dict]]] = OrderedDict()
    for row, record in zip(rows, frame.to_dict("records")):
        if row.household_id in excluded:
            continue
        byHousehold.setdefault(row.household_id, []).append((row, record))

    individuals, followup = [], {}
    skipped = 0
    for householdId, members in byHousehold.items():
        times = [infectionDay[r.person_id] - origin for r, _ in members if r.person_id in infectionDay]
        if not times:
            skipped += 1
        indexTime = min(times, default=math.inf)
        indexOnset = indexTime + nh.incubationDays
        if times:
            followup[householdId] = indexTime + nh.followupDays

        for row, record in members:
            infectionTime = infectionDay[row.person_id] - origin if row.person_id in infectionDay else math.inf
            values, changes = {}, {}
            for name in names:
                if name in startColumns:
                    start = record[startColumns[name]]
                    values[name] = 0.0
                    if not pd.isna(start):
                        changes[name] = ((float(start) - origin, 1.0),)
                elif name in nh.timeDependentCovariates:
                    values[name] = 0.0
                    if float(record[name]) != 0.0 and math.isfinite(indexTime):
                        changes[name] = ((indexOnset + nh.treatmentLagDays, float(record[name])),)
                else:
                    values[name] = float(record[name])
            individuals.append(
                Individual(
                    person_id=row.person_id,
                    household_id=householdId,
                    infection_time=infectionTime,
                    latent_period=nh.latentDays,
                    infectious_period=nh.infectiousDays,
                    covariates=values,
                    covariate_changes=changes,
                )
            )

    population = Population(individuals)
    # the earliest infections of a household were brought in from outside
    indexIds = {pid for ids in index_cases(population).values() for pid in ids}
    infections = [
        InfectionRecord(p.person_id, p.infection_time, EXTERNAL if p.person_id in indexIds else None)
        for p in individuals
        if p.is_infected
    ]

    # households without infection are followed as long as the longest one
    lastEnd = max(followup.values())
    for householdId in byHousehold:
        followup.setdefault(householdId, lastEnd)

    logger.info(
        f"Loaded {len(individuals)} people in {len(byHousehold)} household(s) from {path}; "
        f"{len(infections)} infection(s), {skipped} household(s) without infection"
    )
    return HouseholdData(
        population=population,
        infections=infections,
        followup_end=followup,
        covariates=names,
        excluded_households=excluded,
    )


def write_pair_rows(rows: Sequence[PairRow], path: PathLike) -> Path:
    """One CSV line per segment, raw covariate columns after the fixed ones."""
    covariateNames: List[str] = []
    for row in rows:
        for seg in row.segments:
            for name in seg.covariates:
                if name not in covariateNames:
                    covariateNames.append(name)

    lines = []
    for row in rows:
        for seg in row.segments:
            line = {
                "source_id": row.source_id,
                "subject_id": row.subject_id,
                "zeta": row.zeta,
                "origin": row.origin,
                "seg_start": seg.start,
                "seg_stop": seg.stop,
                "outcome": row.outcome.value,
                "event_time": row.event_time,
                "household_id": row.household_id,
            }
            for name in covariateNames:
                line[name] = seg.covariates.get(name)
            lines.append(line)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(lines, columns=PAIR_COLUMNS + covariateNames).to_csv(path, index=False)
    logger.info(f"Wrote {len(rows)} pair rows ({len(lines)} segments) to {path}")
    return path


def read_pair_rows(path: PathLike) -> List[PairRow]:
    """Inverse of write_pair_rows; consecutive lines of one pair form one row."""
    frame = _read_csv(path, PAIR_COLUMNS)
    covariateNames = [c for c in frame.columns if c not in PAIR_COLUMNS]
    valid = {o.value for o in Outcome}
    bad = set(frame["outcome"]) - valid
    if bad:
        raise SchemaError(f"{path}: unknown outcome value(s) {sorted(bad)}")
    if not frame.empty and ((frame["source_id"] == EXTERNAL) != (frame["zeta"] == 1)).any():
        raise SchemaError(f"{path}: zeta must be 1 exactly for source_id {EXTERNAL}")

    rows: List[PairRow] = []
    current, segments = None, []

    def flush():
        if current is None:
            return
        eventTime = current["event_time"]
        try:
            rows.append(
                PairRow(
                    source_id=int(current["source_id"]),
                    subject_id=int(current["subject_id"]),
                    origin=float(current["origin"]),
                    segments=tuple(segments),
                    outcome=Outcome(current["outcome"]),
                    event_time=None if pd.isna(eventTime) else float(eventTime),
                    household_id=int(current["household_id"]),
                )
            )
        except TransmissionError as e:
            raise SchemaError(f"{path}: {e}") from e

    for record in frame.to_dict("records"):
        key = (record["source_id"], record["subject_id"])
        if current is None or key != (current["source_id"], current["subject_id"]):
            flush()
            current, segments = record, []
        segments.append(
            Segment(
                start=float(record["seg_start"]),
                stop=float(record["seg_stop"]),
                covariates={name: float(record[name]) for name in covariateNames},
            )
        )
    flush()
    logger.info(f"Read {len(rows)} pair rows from {path}")
    return rows


def write_population(population: Population, path: PathLike) -> Path:
    names = population.covariate_names()
    lines = []
    for person in population:
        line = {
            "person_id": person.person_id,
            "household_id": person.household_id,
            "infection_time": person.infection_time if person.is_infected else None,
            "latent_period": person.latent_period,
            "infectious_period": person.infectious_period,
        }
        line.update({name: person.covariates.get(name) for name in names})
        lines.append(line)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(lines).to_csv(path, index=False)
    return path


def write_infections(infections: Sequence[InfectionRecord], path: PathLike) -> Path:
    frame = pd.DataFrame(
        [
            {
                "subject_id": r.subject_id,
                "infection_time": r.infection_time,
                "infector": r.infector,
            }
            for r in infections
        ],
        columns=["subject_id", "infection_time", "infector"],
    )
    # keep infector ids integral when some are missing
    frame["infector"] = frame["infector"].astype("Int64")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def read_profiles(path: PathLike) -> Tuple[Dict[str, Dict[str, float]], Dict[str, Dict[str, float]]]:
    """
    Read SAR profiles: columns role (source|subject), label, base covariates.

    Returns:
        (source profiles, subject profiles), each label -> covariates
    """
    frame = _read_csv(path, ["role", "label"])
    names = [c for c in frame.columns if c not in ("role", "label")]
    sources, subjects = OrderedDict(), OrderedDict()
    for lineNo, record in enumerate(frame.to_dict("records"), start=2):
        try:
            row = ProfileRow(
                role=record["role"],
                label=None if pd.isna(record["label"]) else str(record["label"]),
                covariates={n: record[n] for n in names if not pd.isna(record[n])},
            )
        except ValidationError as e:
            error = e.errors()[0]
            where = ".".join(str(part) for part in error["loc"])
            raise SchemaError(f"{path} line {lineNo}: {where}: {error['msg']}") from e
        profiles = sources if row.role == "source" else subjects
        if row.label in profiles:
            raise SchemaError(f"{path} line {lineNo}: duplicate {row.role} profile '{row.label}'")
        profiles[row.label] = dict(row.covariates)
    if not sources or not subjects:
        raise SchemaError(f"{path}: need at least one source and one subject profile")
    return sources, subjects


def write_table(rows: Union[pd.DataFrame, Sequence[dict]], path: PathLike) -> Path:
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} row(s) to {path}")
    return path


def read_fit(path: PathLike):
    from ..estimation import FitResult

    try:
        return FitResult.from_json(Path(path))
    except (OSError, ValueError) as e:
        raise SchemaError(f"Cannot read fit from {path}: {e}") from e
