"""
Replicate simulation study.

Each replicate simulates one epidemic from its own seed, builds the pair
dataset for every study design and WIW mode, fits the true model families,
and records estimates and interval coverage per parameter. Replicates run on
a process pool; results come back in replicate order so the summary does
not depend on the worker count.
"""

import logging
import math
from dataclasses import replace
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.config.config import Config
from ..core.data.design import build_design_matrix
from ..core.data.schema import StudyDesign
from ..core.errors import TransmissionError
from ..core.estimation import fit_mle
from ..core.likelihood import ModelSpec
from ..core.simulation import SimConfig, draw_truth, simulate
from ..core.utils import derive_seed

logger = logging.getLogger(__name__)

METRICS = ("bias", "mse", "wald_coverage", "lr_coverage", "nonconverged", "singular", "n")


def run_replicate(config: Config, index: int) -> List[Dict[str, object]]:
    """Simulate replicate ``index`` and fit it under every design and WIW mode."""
    sim = config.simulation
    study = config.study
    rng = np.random.default_rng(derive_seed(sim.seed, index, 0))
    beta = draw_truth(rng) if sim.drawTruth else None
    outcome = simulate(SimConfig.from_config(sim, seed=derive_seed(sim.seed, index, 1), beta=beta))
    terms = outcome.spec.terms

    records = []
    for designName in study.designs:
        design = StudyDesign.parse(designName)
        spec = ModelSpec(
            outcome.spec.internal_family,
            outcome.spec.external_family if design.includes_external else None,
            terms,
        )
        for mode in study.wiwModes:
            base = {
                "replicate": index,
                "design": design.value,
                "wiw": mode,
                "incomplete": outcome.incomplete,
                "n_infections": outcome.n_infections,
            }
            try:
                dataset = build_design_matrix(outcome.pair_rows(design, mode == "observed"), terms)
                fit = fit_mle(
                    dataset, spec, config.fitting, lr_intervals=study.lrIntervals, p_values="none"
                )
            except TransmissionError as e:
                logger.warning(f"Replicate {index} {design.value}/{mode}: {e}")
                fit = None

            for name in spec.parameter_names():
                record = dict(base, parameter=name, truth=outcome.truth.get(name))
                if fit is None or not fit.converged:
                    record.update(converged=False, singular=False, estimate=math.nan)
                    records.append(record)
                    continue
                ci = fit.intervals.get(name, {})
                waldLo, waldHi = ci.get("wald", (math.nan, math.nan))
                lrLo, lrHi = ci.get("lr", (math.nan, math.nan))
                record.update(
                    converged=True,
                    singular=fit.information_singular,
                    estimate=fit.estimate(name),
                    wald_lo=waldLo,
                    wald_hi=waldHi,
                    lr_lo=lrLo,
                    lr_hi=lrHi,
                )
                records.append(record)
    return records


def _run_replicate_star(args):
    return run_replicate(*args)


def summarize(records: pd.DataFrame) -> pd.DataFrame:
    """
    Long-format summary keyed by (design, wiw, parameter, metric).

    Bias and MSE use converged fits with usable standard errors. Coverage is
    taken over every converged fit, so a fit missing its interval counts as
    not covering. ``nonconverged`` and ``singular`` count the failed and the
    singular-information fits, and ``n`` is the replicate count of the cell.
    """
    rows = []
    keys = ["design", "wiw", "parameter"]
    for (design, wiw, parameter), cell in records.groupby(keys, sort=False):
        converged = cell["converged"].astype(bool)
        singular = cell["singular"].eq(True) if "singular" in cell else converged & False
        ok = cell[converged]
        regular = cell[converged & ~singular]
        error = regular["estimate"] - regular["truth"]

        def coverage(lo, hi):
            if lo not in ok or ok.empty:
                return math.nan
            if not (ok[lo].notna() & ok[hi].notna()).any():
                return math.nan
            # NaN bounds compare False
            inside = (ok[lo] <= ok["truth"]) & (ok["truth"] <= ok[hi])
            return float(inside.mean())

        values = {
            "bias": float(error.mean()) if len(regular) else math.nan,
            "mse": float((error**2).mean()) if len(regular) else math.nan,
            "wald_coverage": coverage("wald_lo", "wald_hi"),
            "lr_coverage": coverage("lr_lo", "lr_hi"),
            "nonconverged": int((~converged).sum()),
            "singular": int((converged & singular).sum()),
            "n": int(len(cell)),
        }
        for metric in METRICS:
            rows.append(
                {
                    "design": design,
                    "wiw": wiw,
                    "parameter": parameter,
                    "metric": metric,
                    "value": values[metric],
                }
            )
    return pd.DataFrame(rows, columns=["design", "wiw", "parameter", "metric", "value"])


class ReplicateStudy:
    """Runs and summarizes the replicate study described by a Config."""

    def __init__(self, config: Config):
        self.config = config
        self.records: Optional[pd.DataFrame] = None
        self.summary: Optional[pd.DataFrame] = None

    def run(
        self,
        n_replicates: Optional[int] = None,
        workers: Optional[int] = None,
    ) -> pd.DataFrame:
        n = n_replicates or self.config.study.nReplicates
        workers = workers or self.config.study.workers
        if n < 1:
            raise TransmissionError(f"Replicate count must be >= 1, got {n}")
        logger.info(
            f"Running {n} replicate(s) over designs {self.config.study.designs} "
            f"and WIW modes {self.config.study.wiwModes} with {workers} worker(s)"
        )

        tasks = [(self.config, index) for index in range(n)]
        if workers > 1:
            with Pool(workers) as pool:
                results = pool.map(_run_replicate_star, tasks)
        else:
            results = [_run_replicate_star(task) for task in tasks]

        self.records = pd.DataFrame([row for replicate in results for row in replicate])
        for column in ("wald_lo", "wald_hi", "lr_lo", "lr_hi"):
            if column not in self.records:
                self.records[column] = math.nan
        singular = int(self.records["singular"].sum())
        if singular:
            logger.warning(f"{singular} parameter record(s) from fits with singular information")
        self.summary = summarize(self.records)
        failed = int((~self.records["converged"].astype(bool)).sum())
        logger.info(f"Finished {n} replicate(s); {failed} parameter record(s) from failed fits")
        return self.summary


def replicate_study(
    config: Config,
    designs: Optional[Sequence[str]] = None,
    wiw_modes: Optional[Sequence[str]] = None,
    n_replicates: Optional[int] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """Summary table of a replicate study; arguments override ``config.study``."""
    study = replace(
        config.study,
        designs=list(designs) if designs is not None else config.study.designs,
        wiwModes=list(wiw_modes) if wiw_modes is not None else config.study.wiwModes,
    )
    study.validate()
    return ReplicateStudy(replace(config, study=study)).run(n_replicates, workers)
