"""
Event-driven household epidemic simulation.

Households are disjoint complete graphs. Every person gets an external
contact time drawn at the population origin; when a person becomes
infectious, a contact interval is drawn for each susceptible housemate and
the contact is scheduled if it falls within the infectious period. Events
are processed in calendar order from a heap and the first infectious
contact to reach a susceptible person infects them.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config.config import SimulationConfig
from ..data.pairs import build_pair_rows
from ..data.schema import (
    EXTERNAL,
    ContactStructure,
    Individual,
    InfectionRecord,
    PairRow,
    Population,
    StudyDesign,
)
from ..errors import ConfigError
from ..hazards import HazardFamily
from ..likelihood import ModelSpec, ParamSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    """
    Inputs of one simulated epidemic.

    Attributes:
        n_households: Number of households
        household_size: People per household
        internal_family: Contact interval family within households
        external_family: External contact time family
        truth: True parameters; beta keys are ``<covariate>_inf`` and
            ``<covariate>_sus``
        covariate_name: Name of the Bernoulli covariate
        covariate_probability: P(X = 1)
        infectious_period: iota for every person
        latent_period: epsilon for every person
        target_infections: Stop at this many infections (0 = no target)
        max_time: Stop at this calendar time (0 = no limit)
        seed: Seed of the random stream
    """

    n_households: int = 100
    household_size: int = 6
    internal_family: HazardFamily = HazardFamily.EXPONENTIAL
    external_family: HazardFamily = HazardFamily.EXPONENTIAL
    truth: ParamSet = field(default_factory=lambda: ParamSet(ln_lambda0=0.0, ln_mu0=0.0))
    covariate_name: str = "x"
    covariate_probability: float = 0.5
    infectious_period: float = 1.0
    latent_period: float = 0.0
    target_infections: int = 150
    max_time: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "internal_family", HazardFamily.parse(self.internal_family))
        object.__setattr__(self, "external_family", HazardFamily.parse(self.external_family))
        if self.n_households <= 0 or self.household_size <= 0:
            raise ConfigError("Household count and size must be positive")
        if self.target_infections <= 0 and self.max_time <= 0:
            raise ConfigError("A stop rule is required: target_infections or max_time")
        if not self.infectious_period > 0:
            raise ConfigError("Infectious period must be positive")
        if self.truth.ln_lambda0 is None or self.truth.ln_mu0 is None:
            raise ConfigError("True parameters need ln_lambda0 and ln_mu0")

    @property
    def terms(self) -> Tuple[str, str]:
        return (f"{self.covariate_name}_inf", f"{self.covariate_name}_sus")

    @property
    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.internal_family, self.external_family, self.terms)

    @classmethod
    def from_config(
        cls,
        config: SimulationConfig,
        seed: Optional[int] = None,
        beta: Optional[Tuple[float, float]] = None,
    ) -> "SimConfig":
        """Build from the [simulation] section; ``beta`` overrides betaInf/betaSus."""
        betaInf, betaSus = beta if beta is not None else (config.betaInf, config.betaSus)
        internal = HazardFamily.parse(config.internalFamily)
        external = HazardFamily.parse(config.externalFamily)
        truth = ParamSet(
            beta={f"{config.covariateName}_inf": betaInf, f"{config.covariateName}_sus": betaSus},
            ln_lambda0=config.lnLambda0,
            ln_mu0=config.lnMu0,
            ln_gamma_int=config.lnGammaInt if internal.has_shape else None,
            ln_gamma_ext=config.lnGammaExt if external.has_shape else None,
        )
        return cls(
            n_households=config.nHouseholds,
            household_size=config.householdSize,
            internal_family=internal,
            external_family=external,
            truth=truth,
            covariate_name=config.covariateName,
            covariate_probability=config.covariateProbability,
            infectious_period=config.infectiousPeriod,
            latent_period=config.latentPeriod,
            target_infections=config.targetInfections,
            max_time=config.maxTime,
            seed=config.seed if seed is None else seed,
        )


@dataclass
class SimOutcome:
    """
    Result of one simulated epidemic.

    ``followup_end`` is the stopping time T; ``incomplete`` is set when the
    target infection count was never reached.
    """

    population: Population
    infections: List[InfectionRecord]
    contacts: ContactStructure
    truth: ParamSet
    spec: ModelSpec
    followup_end: float
    incomplete: bool
    seed: int

    @property
    def n_infections(self) -> int:
        return len(self.infections)

    def masked_infections(self) -> List[InfectionRecord]:
        """Infection records with every infector hidden."""
        return [
            InfectionRecord(r.subject_id, r.infection_time, infector=None) for r in self.infections
        ]

    def pair_rows(self, design, wiw_observed: bool) -> List[PairRow]:
        infections = self.infections if wiw_observed else self.masked_infections()
        return build_pair_rows(
            self.population,
            self.contacts,
            infections,
            StudyDesign.parse(design),
            wiw_observed,
            self.followup_end,
        )


def draw_truth(rng: np.random.Generator) -> Tuple[float, float]:
    """Independent uniform(-1, 1) draws of (beta_inf, beta_sus)."""
    betaInf, betaSus = rng.uniform(-1.0, 1.0, size=2)
    return float(betaInf), float(betaSus)


def _uniform(rng: np.random.Generator) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def simulate(config: SimConfig) -> SimOutcome:
    """
    Run one epidemic.

    Deterministic given ``config.seed``: covariates are drawn first in
    ascending id, then external contact times in ascending id, then contact
    intervals per infectious person for housemates in ascending id.
    """
    rng = np.random.default_rng(config.seed)
    truth = config.truth
    nPeople = config.n_households * config.household_size
    ids = list(range(1, nPeople + 1))
    householdOf = {pid: (pid - 1) // config.household_size + 1 for pid in ids}
    covariate = {
        pid: float(value)
        for pid, value in zip(ids, rng.random(nPeople) < config.covariate_probability)
    }
    members: Dict[int, List[int]] = {}
    for pid in ids:
        members.setdefault(householdOf[pid], []).append(pid)

    betaInf = truth.beta.get(config.terms[0], 0.0)
    betaSus = truth.beta.get(config.terms[1], 0.0)
    gammaInt = truth.gamma_int if config.internal_family.has_shape else 1.0
    gammaExt = truth.gamma_ext if config.external_family.has_shape else 1.0

    queue: List[Tuple[float, int, int, int]] = []
    sequence = 0
    for pid in ids:
        logRate = betaSus * covariate[pid] + truth.ln_mu0
        t = config.external_family.inverse_survival(logRate, gammaExt, _uniform(rng))
        heapq.heappush(queue, (t, sequence, pid, EXTERNAL))
        sequence += 1

    infectedAt: Dict[int, float] = {}
    records: List[InfectionRecord] = []
    stopTime = None
    while queue:
        time, _, subject, source = heapq.heappop(queue)
        if subject in infectedAt:
            continue
        if config.max_time > 0 and time > config.max_time:
            stopTime = config.max_time
            break
        infectedAt[subject] = time
        records.append(InfectionRecord(subject, time, source))
        if config.target_infections > 0 and len(records) >= config.target_infections:
            stopTime = time
            break

        onset = time + config.latent_period
        for housemate in members[householdOf[subject]]:
            if housemate == subject or housemate in infectedAt:
                continue
            logRate = (
                betaInf * covariate[subject]
                + betaSus * covariate[housemate]
                + truth.ln_lambda0
            )
            tau = config.internal_family.inverse_survival(logRate, gammaInt, _uniform(rng))
            if tau <= config.infectious_period:
                heapq.heappush(queue, (onset + tau, sequence, housemate, subject))
                sequence += 1

    incomplete = config.target_infections > 0 and len(records) < config.target_infections
    if stopTime is None:
        stopTime = config.max_time if config.max_time > 0 else max(infectedAt.values(), default=0.0)
    if incomplete:
        logger.warning(
            f"Epidemic (seed {config.seed}) stopped at {len(records)} of "
            f"{config.target_infections} target infections"
        )

    population = Population(
        Individual(
            person_id=pid,
            household_id=householdOf[pid],
            infection_time=infectedAt.get(pid, math.inf),
            latent_period=config.latent_period,
            infectious_period=config.infectious_period,
            covariates={config.covariate_name: covariate[pid]},
        )
        for pid in ids
    )
    logger.info(
        f"Simulated {len(records)} infections in {config.n_households} households "
        f"(seed {config.seed}, T={stopTime:.4f})"
    )
    return SimOutcome(
        population=population,
        infections=records,
        contacts=ContactStructure.from_population(population),
        truth=truth,
        spec=config.model_spec,
        followup_end=stopTime,
        incomplete=incomplete,
        seed=config.seed,
    )
