"""Tests for household ingestion and file formats."""

import math
from pathlib import Path
import sys

import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))
from transmission_aft.core.config import NaturalHistoryConfig
from transmission_aft.core.data import (
    InfectionRecord,
    build_design_matrix,
    build_pair_rows,
    load_households,
    read_pair_rows,
    read_profiles,
    write_infections,
    write_pair_rows,
)
from transmission_aft.core.errors import SchemaError
from transmission_aft.core.estimation import compare_families, fit_mle
from transmission_aft.core.likelihood import ModelSpec, ParamSet, loglik_total

HOUSEHOLDS = """household_id,person_id,onset_day,adult,proph
1,1,10,1,1
1,2,13,0,1
1,3,,1,0
2,4,12,1,0
2,5,,0,
3,6,,1,0
"""

TERMS = ["adult_inf", "adult_sus", "proph_sus"]


@pytest.fixture
def households_csv(temp_dir):
    path = temp_dir / "households.csv"
    path.write_text(HOUSEHOLDS, encoding="utf-8")
    return path


def test_household_ingestion(households_csv):
    """Onsets become infection times measured from one day before the earliest infection."""
    data = load_households(households_csv, NaturalHistoryConfig())

    assert data.excluded_households == [2]
    assert [p.person_id for p in data.population] == [1, 2, 3, 6]
    assert data.infections == [InfectionRecord(1, 1.0, 0), InfectionRecord(2, 4.0, None)]
    assert data.followup_end == {1: 15.0, 3: 15.0}
    assert data.covariates == ["adult", "proph"]

    index = data.population[1]
    assert index.infectious_period == 6.0
    assert index.covariates == {"adult": 1.0, "proph": 0.0}
    # prophylaxis starts one day after the index onset (day 10, study day 3)
    assert index.covariate_changes == {"proph": ((4.0, 1.0),)}
    assert data.population[3].covariate_changes == {}
    assert not data.population[6].is_infected


def test_natural_history_overrides(households_csv):
    """Incubation, follow-up and lag settings move the derived times."""
    nh = NaturalHistoryConfig(incubationDays=1.0, followupDays=10.0, treatmentLagDays=0.0)
    data = load_households(households_csv, nh)
    assert data.infections[1].infection_time == 4.0
    assert data.followup_end[1] == 11.0
    assert data.population[2].covariate_changes == {"proph": ((2.0, 1.0),)}


def test_treatment_start_day_column(temp_dir):
    """A <covariate>_start_day column gives the switch-on day directly."""
    path = temp_dir / "start.csv"
    path.write_text(
        "household_id,person_id,onset_day,adult,proph_start_day\n"
        "1,1,10,1,11\n"
        "1,2,,0,\n",
        encoding="utf-8",
    )
    data = load_households(path, NaturalHistoryConfig())
    assert data.covariates == ["adult", "proph"]
    assert data.population[1].covariate_changes == {"proph": ((4.0, 1.0),)}
    assert data.population[2].covariate_changes == {}


def test_household_pair_rows_use_time_dependent_prophylaxis(households_csv):
    """The index case's prophylaxis switch cuts its rows toward housemates."""
    data = load_households(households_csv, NaturalHistoryConfig())
    rows = build_pair_rows(
        data.population, data.contacts, data.infections, "ct-delayed-entry", False, data.followup_end
    )
    assert all(row.household_id == 1 for row in rows)
    fromIndex = next(row for row in rows if (row.source_id, row.subject_id) == (1, 3))
    assert [seg.covariates["proph_inf"] for seg in fromIndex.segments] == [0.0, 1.0]
    candidates = {row.source_id for row in rows if row.subject_id == 2 and row.is_event}
    assert candidates == {0, 1}


def test_pair_rows_round_trip(households_csv, temp_dir):
    """Pair rows reload from CSV to the same rows and the same log-likelihood."""
    data = load_households(households_csv, NaturalHistoryConfig())
    rows = build_pair_rows(
        data.population, data.contacts, data.infections, "complete-cohort", False, data.followup_end
    )
    path = write_pair_rows(rows, temp_dir / "pairs.csv")
    reloaded = read_pair_rows(path)
    assert reloaded == rows

    spec = ModelSpec("weibull", "exponential", tuple(TERMS))
    params = ParamSet(
        beta={"adult_inf": 0.3, "adult_sus": -0.2, "proph_sus": -0.5},
        ln_lambda0=-2.0, ln_mu0=-3.0, ln_gamma_int=0.2,
    )
    a = loglik_total(build_design_matrix(rows, TERMS), params, spec)
    b = loglik_total(build_design_matrix(reloaded, TERMS), params, spec)
    assert a == b


def test_household_weibull_external_fit(household_study_csv):
    """Complete-cohort household data supports Weibull and log-logistic external families."""
    data = load_households(household_study_csv, NaturalHistoryConfig())
    rows = build_pair_rows(
        data.population, data.contacts, data.infections, "complete-cohort", False, data.followup_end
    )
    externalEvents = [row for row in rows if row.zeta == 1 and row.is_event]
    assert len(externalEvents) >= 8
    assert min(row.event_time for row in externalEvents) > 0.0

    dataset = build_design_matrix(rows, [])
    spec = ModelSpec("exponential", "weibull", ())
    for lnGamma in (-0.5, -0.1, 0.0, 0.1, 0.5):
        params = ParamSet(ln_lambda0=-2.0, ln_mu0=-3.0, ln_gamma_ext=lnGamma)
        assert math.isfinite(loglik_total(dataset, params, spec))

    weibull = fit_mle(dataset, spec, lr_intervals=False, p_values="none")
    exponential = fit_mle(
        dataset, ModelSpec("exponential", "exponential", ()), lr_intervals=False, p_values="none"
    )
    assert math.isfinite(weibull.loglik)
    assert weibull.loglik >= exponential.loglik - 1e-6

    table = compare_families(dataset, [], internal_families=("exponential",))
    assert [row["external_family"] for row in table] == ["exponential", "weibull", "loglogistic"]
    assert all(math.isfinite(row["loglik"]) for row in table)


def test_study_start_days(households_csv):
    """studyStartDays sets how far study time 0 lies before the earliest infection."""
    data = load_households(households_csv, NaturalHistoryConfig(studyStartDays=0.5))
    assert data.infections[0].infection_time == 0.5
    assert data.infections[1].infection_time == 3.5


def test_coprimary_cases_are_external(temp_dir):
    """Housemates sharing the earliest onset are all index cases infected from outside."""
    path = temp_dir / "coprimary.csv"
    path.write_text(
        "household_id,person_id,onset_day\n1,1,5\n1,2,5\n1,3,8\n1,4,\n",
        encoding="utf-8",
    )
    data = load_households(path, NaturalHistoryConfig(incubationDays=0.0))
    assert [(r.subject_id, r.infector) for r in data.infections] == [(1, 0), (2, 0), (3, None)]


def test_missing_column(temp_dir):
    """Household files need household_id, person_id and onset_day."""
    path = temp_dir / "bad.csv"
    path.write_text("household_id,person_id\n1,1\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_households(path)


def test_duplicate_person(temp_dir):
    """Person ids are unique."""
    path = temp_dir / "dupe.csv"
    path.write_text("household_id,person_id,onset_day\n1,1,3\n2,1,4\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_households(path)


def test_nonpositive_person_id(temp_dir):
    """Person id 0 is reserved for the external source."""
    path = temp_dir / "zero.csv"
    path.write_text("household_id,person_id,onset_day\n1,0,3\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_households(path)


def test_bad_outcome_in_pair_file(temp_dir):
    """Unknown outcome codes are rejected."""
    path = temp_dir / "pairs.csv"
    path.write_text(
        "source_id,subject_id,zeta,origin,seg_start,seg_stop,outcome,event_time,household_id\n"
        "0,1,1,0.0,0.0,1.0,infected,1.0,1\n",
        encoding="utf-8",
    )
    with pytest.raises(SchemaError):
        read_pair_rows(path)


def test_profiles(temp_dir):
    """Profiles split into source and subject dictionaries."""
    path = temp_dir / "profiles.csv"
    path.write_text(
        "role,label,adult,proph\n"
        "source,child,0,\n"
        "source,adult,1,\n"
        "subject,child untreated,0,0\n",
        encoding="utf-8",
    )
    sources, subjects = read_profiles(path)
    assert sources == {"child": {"adult": 0.0}, "adult": {"adult": 1.0}}
    assert subjects == {"child untreated": {"adult": 0.0, "proph": 0.0}}


def test_profiles_bad_role(temp_dir):
    """Roles are source or subject."""
    path = temp_dir / "profiles.csv"
    path.write_text("role,label,adult\nparent,a,1\nsubject,b,0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_profiles(path)


def test_profiles_are_validated(temp_dir):
    """Roles ignore case; bad values and blank or repeated labels are rejected."""
    path = temp_dir / "profiles.csv"
    path.write_text("role,label,adult\nSource,a,1\n subject ,b,0\n", encoding="utf-8")
    assert read_profiles(path) == ({"a": {"adult": 1.0}}, {"b": {"adult": 0.0}})

    for body in (
        "role,label,adult\nsource,a,yes\nsubject,b,0\n",
        "role,label,adult\nsource,,1\nsubject,b,0\n",
        "role,label,adult\nsource,a,1\nsource,a,0\nsubject,b,0\n",
        "role,label,adult\nsource,a,inf\nsubject,b,0\n",
    ):
        path.write_text(body, encoding="utf-8")
        with pytest.raises(SchemaError):
            read_profiles(path)


def test_infections_file_keeps_integer_infectors(temp_dir):
    """Unknown infectors are blank and known ones stay integral."""
    path = write_infections(
        [InfectionRecord(1, 0.5, 0), InfectionRecord(2, 1.25, None), InfectionRecord(3, 2.0, 2)],
        temp_dir / "infections.csv",
    )
    frame = pd.read_csv(path)
    assert path.read_text(encoding="utf-8").splitlines()[2] == "2,1.25,"
    assert frame["infector"].tolist()[0] == 0
    assert math.isnan(frame["infector"].tolist()[1])
