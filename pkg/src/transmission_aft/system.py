import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from .core.config import Config
from .core.data import (
    HouseholdData,
    PairRow,
    StudyDesign,
    build_design_matrix,
    build_pair_rows,
    load_households,
    read_pair_rows,
    write_infections,
    write_pair_rows,
    write_population,
    write_table,
)
from .core.estimation import (
    FitResult,
    backward_select,
    compare_families,
    fit_mle,
    lr_test,
    predict_sar_table,
)
from .core.likelihood import ModelSpec
from .core.simulation import SimConfig, SimOutcome, simulate
from .pipeline import ReplicateStudy

logger = logging.getLogger(__name__)


class TransmissionStudySystem:
    """
    Entry point tying configuration, data, fitting and simulation together.

    Every method reads its defaults from the loaded Config; keyword
    arguments override them for one call.
    """

    def __init__(self, config: Config = None, outputDir: Optional[str] = None):
        self.config = Config.from_file() if config is None else config
        self.outputDir = Path(outputDir or self.config.output.dir)

    # ------------------------------------------------------------ simulation

    def simulate(self, seed: Optional[int] = None, write: bool = True) -> Tuple[SimOutcome, List[Path]]:
        """Simulate one epidemic and write population, infections and pair rows."""
        simConfig = SimConfig.from_config(self.config.simulation, seed=seed)
        outcome = simulate(simConfig)
        paths = []
        if write:
            paths.append(write_population(outcome.population, self.outputDir / "population.csv"))
            paths.append(write_infections(outcome.infections, self.outputDir / "infections.csv"))
            for (design, mode), rows in self.build_datasets(outcome).items():
                paths.append(write_pair_rows(rows, self.outputDir / f"pairs_{design}_{mode}.csv"))
        return outcome, paths

    def build_datasets(
        self,
        outcome: SimOutcome,
        designs: Optional[Sequence[str]] = None,
        wiwModes: Optional[Sequence[str]] = None,
    ) -> Dict[Tuple[str, str], List[PairRow]]:
        datasets = {}
        for design in designs or self.config.study.designs:
            for mode in wiwModes or self.config.study.wiwModes:
                datasets[(StudyDesign.parse(design).value, mode)] = outcome.pair_rows(
                    design, mode == "observed"
                )
        return datasets

    # ------------------------------------------------------------ data input

    def load_households(self, path: str, **naturalHistory) -> HouseholdData:
        """Ingest a household CSV; keyword arguments override [naturalHistory] fields."""
        overrides = {k: v for k, v in naturalHistory.items() if v is not None}
        nh = replace(self.config.naturalHistory, **overrides)
        nh.validate()
        return load_households(path, nh)

    def household_pairs(
        self, data: HouseholdData, design: str = "ct-delayed-entry", wiwObserved: bool = False
    ) -> List[PairRow]:
        return build_pair_rows(
            data.population,
            data.contacts,
            data.infections,
            design,
            wiwObserved,
            data.followup_end,
        )

    def load_pairs(self, path: str) -> List[PairRow]:
        return read_pair_rows(path)

    # ------------------------------------------------------------ estimation

    def model_spec(
        self,
        terms: Optional[Sequence[str]] = None,
        internalFamily: Optional[str] = None,
        externalFamily: Optional[str] = None,
    ) -> ModelSpec:
        model = self.config.model
        return ModelSpec(
            internalFamily or model.internalFamily,
            externalFamily or model.externalFamily,
            tuple(model.terms if terms is None else terms),
        )

    def fit(
        self,
        rows: Sequence[PairRow],
        spec: Optional[ModelSpec] = None,
        pValues: str = "lr",
        lrIntervals: bool = True,
    ) -> FitResult:
        spec = spec or self.model_spec()
        dataset = build_design_matrix(rows, spec.terms)
        return fit_mle(dataset, spec, self.config.fitting, lr_intervals=lrIntervals, p_values=pValues)

    def select(
        self,
        rows: Sequence[PairRow],
        spec: Optional[ModelSpec] = None,
        protectedTerms: Optional[Sequence[str]] = None,
    ):
        spec = spec or self.model_spec()
        protected = self.config.model.protectedTerms if protectedTerms is None else protectedTerms
        dataset = build_design_matrix(rows, spec.terms)
        return backward_select(dataset, spec, protected, self.config.fitting)

    def compare_families(self, rows: Sequence[PairRow], terms: Optional[Sequence[str]] = None):
        terms = tuple(self.config.model.terms if terms is None else terms)
        dataset = build_design_matrix(rows, terms)
        return compare_families(dataset, terms, self.config.fitting)

    def external_interaction_test(
        self, rows: Sequence[PairRow], spec: ModelSpec, interactionTerms: Sequence[str]
    ) -> Dict[str, float]:
        """LR test of adding ``interactionTerms`` (e.g. ``proph_sus:zeta``) to ``spec``."""
        reduced = self.fit(rows, spec, pValues="none", lrIntervals=False)
        fullSpec = spec.with_terms(list(spec.terms) + list(interactionTerms))
        full = self.fit(rows, fullSpec, pValues="none", lrIntervals=False)
        return lr_test(full, reduced)

    def predict_sar(
        self,
        fit: FitResult,
        sources: Mapping[str, Mapping[str, float]],
        subjects: Mapping[str, Mapping[str, float]],
        infectiousPeriod: Optional[float] = None,
    ) -> List[dict]:
        iota = infectiousPeriod or self.config.naturalHistory.infectiousDays
        return predict_sar_table(fit, sources, subjects, iota, self.config.fitting.ciLevel)

    # ------------------------------------------------------------ replicates

    def replicate_study(
        self, nReplicates: Optional[int] = None, workers: Optional[int] = None, write: bool = True
    ) -> pd.DataFrame:
        study = ReplicateStudy(self.config)
        summary = study.run(nReplicates, workers)
        if write:
            write_table(study.records, self.outputDir / "replicates.csv")
            write_table(summary, self.outputDir / "summary.csv")
        return summary
