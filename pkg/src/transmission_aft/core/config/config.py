import os
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from ..errors import ConfigError

FAMILY_NAMES = ("exponential", "weibull", "loglogistic")
DESIGN_NAMES = (
    "complete-cohort",
    "ct-delayed-entry",
    "ct-no-delayed-entry",
    "ignore-external",
)
WIW_MODES = ("observed", "unobserved")


@dataclass
class SimulationConfig:
    nHouseholds: int = 100
    householdSize: int = 6
    internalFamily: str = "exponential"
    externalFamily: str = "exponential"
    lnLambda0: float = 0.0
    lnMu0: float = 0.0
    lnGammaInt: float = 0.0
    lnGammaExt: float = 0.0
    betaInf: float = 0.0
    betaSus: float = 0.0
    drawTruth: bool = True
    covariateName: str = "x"
    covariateProbability: float = 0.5
    infectiousPeriod: float = 1.0
    latentPeriod: float = 0.0
    targetInfections: int = 150
    maxTime: float = 0.0
    seed: int = 20190601

    def validate(self):
        _require(self.nHouseholds > 0, "simulation.nHouseholds must be positive")
        _require(self.householdSize > 0, "simulation.householdSize must be positive")
        _require_family("simulation.internalFamily", self.internalFamily)
        _require_family("simulation.externalFamily", self.externalFamily)
        _require(
            0.0 <= self.covariateProbability <= 1.0,
            "simulation.covariateProbability must lie in [0, 1]",
        )
        _require(self.infectiousPeriod > 0, "simulation.infectiousPeriod must be > 0")
        _require(self.latentPeriod >= 0, "simulation.latentPeriod must be >= 0")
        _require(
            self.targetInfections > 0 or self.maxTime > 0,
            "simulation needs a stop rule: targetInfections or maxTime",
        )
        _require(self.targetInfections >= 0, "simulation.targetInfections must be >= 0")
        _require(self.maxTime >= 0, "simulation.maxTime must be >= 0")


@dataclass
class StudyConfig:
    designs: list[str] = field(default_factory=lambda: list(DESIGN_NAMES))
    wiwModes: list[str] = field(default_factory=lambda: list(WIW_MODES))
    nReplicates: int = 200
    lrIntervals: bool = True
    workers: int = 1

    def validate(self):
        for design in self.designs:
            _require(
                design in DESIGN_NAMES,
                f"study.designs: unknown design '{design}' (expected one of {DESIGN_NAMES})",
            )
        for mode in self.wiwModes:
            _require(
                mode in WIW_MODES,
                f"study.wiwModes: unknown mode '{mode}' (expected one of {WIW_MODES})",
            )
        _require(self.nReplicates >= 1, "study.nReplicates must be >= 1")
        _require(self.workers >= 1, "study.workers must be >= 1")


@dataclass
class NaturalHistoryConfig:
    incubationDays: float = 2.0
    latentDays: float = 0.0
    infectiousDays: float = 6.0
    followupDays: float = 14.0
    timeDependentCovariates: list[str] = field(default_factory=lambda: ["proph"])
    treatmentLagDays: float = 1.0
    studyStartDays: float = 1.0

    def validate(self):
        _require(self.incubationDays >= 0, "naturalHistory.incubationDays must be >= 0")
        _require(self.latentDays >= 0, "naturalHistory.latentDays must be >= 0")
        _require(self.infectiousDays > 0, "naturalHistory.infectiousDays must be > 0")
        _require(self.followupDays >= 0, "naturalHistory.followupDays must be >= 0")
        _require(self.treatmentLagDays >= 0, "naturalHistory.treatmentLagDays must be >= 0")
        _require(self.studyStartDays > 0, "naturalHistory.studyStartDays must be > 0")


@dataclass
class ModelConfig:
    internalFamily: str = "exponential"
    externalFamily: str = "exponential"
    terms: list[str] = field(default_factory=list)
    protectedTerms: list[str] = field(default_factory=list)

    def validate(self):
        _require_family("model.internalFamily", self.internalFamily)
        if self.externalFamily != "none":
            _require_family("model.externalFamily", self.externalFamily)
        for term in self.protectedTerms:
            _require(
                term in self.terms,
                f"model.protectedTerms: '{term}' is not one of model.terms",
            )


@dataclass
class FittingConfig:
    maxIter: int = 500
    gradTol: float = 1e-6
    relTol: float = 1e-10
    gradientStep: float = 1e-5
    hessianStep: float = 1e-5
    ciLevel: float = 0.95
    lrTol: float = 1e-6
    lrMaxSE: float = 10.0
    warmStart: bool = True
    workers: int = 1

    def validate(self):
        _require(self.maxIter > 0, "fitting.maxIter must be positive")
        _require(self.gradTol > 0, "fitting.gradTol must be positive")
        _require(self.relTol > 0, "fitting.relTol must be positive")
        _require(self.gradientStep > 0, "fitting.gradientStep must be positive")
        _require(self.hessianStep > 0, "fitting.hessianStep must be positive")
        _require(0.0 < self.ciLevel < 1.0, "fitting.ciLevel must lie in (0, 1)")
        _require(self.lrTol > 0, "fitting.lrTol must be positive")
        _require(self.lrMaxSE > 0, "fitting.lrMaxSE must be positive")
        _require(self.workers >= 1, "fitting.workers must be >= 1")


@dataclass
class OutputConfig:
    dir: str = "output"

    def validate(self):
        _require(bool(self.dir), "output.dir must not be empty")


@dataclass
class Config:
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    naturalHistory: NaturalHistoryConfig = field(default_factory=NaturalHistoryConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    fitting: FittingConfig = field(default_factory=FittingConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_file(cls, configPath: Optional[Union[str, Path]] = None) -> "Config":
        if configPath is None:
            envPath = os.getenv("TRANSMISSION_AFT_CONFIG")
            if envPath:
                configPath = Path(envPath)
            else:
                # Auto-find config.toml in project root
                from ..utils import get_project_root

                configPath = get_project_root() / "config.toml"
        elif isinstance(configPath, str):
            configPath = Path(configPath)

        try:
            with open(configPath, "rb") as f:
                config = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            # message already carries "(at line X, column Y)"
            raise ConfigError(f"Invalid TOML in {configPath}: {e}") from e
        except OSError as e:
            raise ConfigError(f"Failed to load config from {configPath}: {e}") from e

        return cls.from_dict(config)

    @classmethod
    def from_dict(cls, config: dict) -> "Config":
        """Create Config from dictionary (useful for testing)."""
        sections = {f.name: f.type for f in fields(cls)}
        unknown = set(config) - set(sections)
        if unknown:
            raise ConfigError(f"Unknown config section(s): {', '.join(sorted(unknown))}")

        result = cls(
            simulation=_build_section(SimulationConfig, "simulation", config),
            study=_build_section(StudyConfig, "study", config),
            naturalHistory=_build_section(NaturalHistoryConfig, "naturalHistory", config),
            model=_build_section(ModelConfig, "model", config),
            fitting=_build_section(FittingConfig, "fitting", config),
            output=_build_section(OutputConfig, "output", config),
        )
        return result


def _build_section(sectionCls, name: str, config: dict):
    values = dict(config.get(name, {}))
    known = {f.name: f for f in fields(sectionCls)}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"[{name}] unknown field '{key}'")
        values[key] = _coerce(name, known[key], value)
    section = sectionCls(**values)
    section.validate()
    return section


def _coerce(section: str, f, value):
    expected = f.type
    where = f"[{section}] field '{f.name}'"
    if expected is bool or expected == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean, got {value!r}")
        return value
    if expected is int or expected == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if expected is float or expected == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if expected is str or expected == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    # list[str]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{where} must be a list of strings, got {value!r}")
    return list(value)


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _require_family(where: str, name: str):
    _require(
        name in FAMILY_NAMES,
        f"{where}: unknown family '{name}' (expected one of {FAMILY_NAMES})",
    )
