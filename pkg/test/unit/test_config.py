"""Tests for configuration loading."""

from pathlib import Path
import sys

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))
from transmission_aft.core.config import Config
from transmission_aft.core.errors import ConfigError
from transmission_aft.core.utils import get_project_root


def test_defaults(config):
    """An empty mapping gives the documented defaults."""
    assert config.simulation.householdSize == 6
    assert config.simulation.targetInfections == 150
    assert config.naturalHistory.infectiousDays == 6.0
    assert config.fitting.ciLevel == 0.95
    assert config.fitting.gradientStep == 1e-5
    assert config.fitting.hessianStep == 1e-5
    assert config.naturalHistory.studyStartDays == 1.0
    assert config.study.designs[0] == "complete-cohort"


def test_project_config_loads():
    """The shipped config.toml is valid."""
    config = Config.from_file(get_project_root() / "config.toml")
    assert config.model.terms == ["adult_inf", "adult_sus", "proph_sus"]
    assert config.fitting.hessianStep == 1e-5


def test_from_file(temp_dir):
    """TOML sections bind to their dataclasses."""
    path = temp_dir / "config.toml"
    path.write_text('[simulation]\nnHouseholds = 10\n[fitting]\nmaxIter = 20\n', encoding="utf-8")
    config = Config.from_file(path)
    assert config.simulation.nHouseholds == 10
    assert config.fitting.maxIter == 20


def test_env_var_path(temp_dir, monkeypatch):
    """TRANSMISSION_AFT_CONFIG points at the config file."""
    path = temp_dir / "env.toml"
    path.write_text("[output]\ndir = \"elsewhere\"\n", encoding="utf-8")
    monkeypatch.setenv("TRANSMISSION_AFT_CONFIG", str(path))
    assert Config.from_file().output.dir == "elsewhere"


def test_integers_widen_to_floats():
    """An integer where a float is expected is accepted."""
    config = Config.from_dict({"naturalHistory": {"incubationDays": 3}})
    assert config.naturalHistory.incubationDays == 3.0
    assert isinstance(config.naturalHistory.incubationDays, float)


@pytest.mark.parametrize(
    "values",
    [
        {"unknown": {}},
        {"simulation": {"households": 10}},
        {"simulation": {"nHouseholds": "ten"}},
        {"simulation": {"nHouseholds": 0}},
        {"simulation": {"internalFamily": "gamma"}},
        {"study": {"designs": ["case-control"]}},
        {"study": {"lrIntervals": "yes"}},
        {"fitting": {"ciLevel": 1.5}},
        {"naturalHistory": {"studyStartDays": 0.0}},
        {"model": {"terms": ["a_sus"], "protectedTerms": ["b_sus"]}},
    ],
)
def test_invalid_values(values):
    """Unknown names, wrong types and out-of-range values raise ConfigError."""
    with pytest.raises(ConfigError):
        Config.from_dict(values)


def test_invalid_toml_reports_location(temp_dir):
    """Malformed TOML is a ConfigError naming the line."""
    path = temp_dir / "broken.toml"
    path.write_text("[simulation]\nnHouseholds = \n", encoding="utf-8")
    with pytest.raises(ConfigError, match="line"):
        Config.from_file(path)


def test_missing_file(temp_dir):
    """A missing file is a ConfigError."""
    with pytest.raises(ConfigError):
        Config.from_file(temp_dir / "absent.toml")
