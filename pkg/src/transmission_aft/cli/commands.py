"""
Command-line interface.

    transmission-aft simulate
    transmission-aft fit --households data.csv --terms adult_inf adult_sus proph_sus
    transmission-aft select --pairs pairs.csv --terms x_inf x_sus
    transmission-aft predict-sar --fit output/fit.json --profiles profiles.csv
    transmission-aft replicate-study --replicates 20 --threads 4

Exit codes: 0 success, 1 unexpected failure, 2 bad configuration or input,
3 fit did not converge (its JSON is still written).
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from ..core.config import Config, DESIGN_NAMES
from ..core.data import read_fit, read_profiles, write_table
from ..core.errors import (
    ConfigError,
    InconsistentDataError,
    SchemaError,
    TransmissionError,
    UnknownCovariateError,
)
from ..system import TransmissionStudySystem

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transmission-aft",
        description="Household transmission simulation and pairwise AFT regression",
    )
    parser.add_argument("--config", help="Path to config.toml (default: project root)")
    parser.add_argument("--seed", type=int, help="Override the simulation seed")
    parser.add_argument("--threads", type=int, help="Workers for fits and replicates")
    parser.add_argument("--output-dir", help="Directory for output files")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", help="Simulate one epidemic and write its pair rows")

    for name, helpText in (("fit", "Fit a model"), ("select", "Backward selection by AIC")):
        cmd = sub.add_parser(name, help=helpText)
        source = cmd.add_mutually_exclusive_group(required=True)
        source.add_argument("--pairs", help="Pair-row CSV")
        source.add_argument("--households", help="Household CSV")
        cmd.add_argument("--terms", nargs="*", help="Formula terms (default: [model] terms)")
        cmd.add_argument(
            "--families",
            nargs="*",
            default=[],
            metavar="ROLE=FAMILY",
            help="internal=<family> and/or external=<family|none>",
        )
        cmd.add_argument("--wiw", choices=["observed", "unobserved"], default="unobserved")
        cmd.add_argument("--design", choices=DESIGN_NAMES, default="ct-delayed-entry")
        cmd.add_argument("--incubation-days", type=float)
        cmd.add_argument("--latent-days", type=float)
        cmd.add_argument("--infectious-days", type=float)
        cmd.add_argument("--followup-days", type=float)
        if name == "fit":
            cmd.add_argument("--wald-pvalues", action="store_true", help="Wald instead of LR p-values")
            cmd.add_argument("--no-lr", action="store_true", help="Skip profile-likelihood intervals")
            cmd.add_argument(
                "--compare-families", action="store_true", help="Fit all 3x3 family pairs and tabulate AIC"
            )
            cmd.add_argument(
                "--interaction", nargs="*", default=[], help="Terms to test by likelihood ratio"
            )
        else:
            cmd.add_argument("--protect", nargs="*", help="Terms never dropped")

    sar = sub.add_parser("predict-sar", help="Predicted secondary attack rates")
    sar.add_argument("--fit", required=True, help="Fit JSON")
    sar.add_argument("--profiles", required=True, help="Profiles CSV (role,label,covariates)")
    sar.add_argument("--infectious-period", type=float, help="iota (default: infectiousDays)")

    rep = sub.add_parser("replicate-study", help="Replicate simulation study")
    rep.add_argument("--replicates", type=int, help="Number of replicates")
    rep.add_argument("--designs", nargs="*", choices=DESIGN_NAMES)
    rep.add_argument("--wiw-modes", nargs="*", choices=["observed", "unobserved"])
    return parser


def parse_families(items: Sequence[str]) -> Dict[str, str]:
    families = {}
    for item in items:
        role, sep, family = item.partition("=")
        role = role.strip().lower()
        if not sep or role not in ("internal", "external"):
            raise ConfigError(f"--families expects internal=<family> or external=<family>, got '{item}'")
        families[role] = family.strip().lower()
    return families


def _load_config(args) -> Config:
    config = Config.from_file(args.config) if args.config else Config.from_file()
    if args.seed is not None:
        config = replace(config, simulation=replace(config.simulation, seed=args.seed))
    if args.threads:
        config = replace(
            config,
            study=replace(config.study, workers=args.threads),
            fitting=replace(config.fitting, workers=args.threads),
        )
    return config


def _load_rows(system: TransmissionStudySystem, args, spec):
    if args.pairs:
        return system.load_pairs(args.pairs)
    design = args.design
    if not spec.has_external and design != "ignore-external":
        logger.info(f"No external family; using ignore-external pairs instead of {design}")
        design = "ignore-external"
    data = system.load_households(
        args.households,
        incubationDays=args.incubation_days,
        latentDays=args.latent_days,
        infectiousDays=args.infectious_days,
        followupDays=args.followup_days,
    )
    return system.household_pairs(data, design, args.wiw == "observed")


def _print_frame(title: str, frame: pd.DataFrame):
    print("=" * 60)
    print(title)
    print("=" * 60)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


def cmd_simulate(system: TransmissionStudySystem, args) -> int:
    outcome, paths = system.simulate()
    print(f"Seed: {outcome.seed}")
    print(f"Infections: {outcome.n_infections} (stop time {outcome.followup_end:.4f})")
    if outcome.incomplete:
        print("Epidemic ended before the target infection count")
    for path in paths:
        print(f"Wrote {path}")
    return EXIT_OK


def cmd_fit(system: TransmissionStudySystem, args) -> int:
    families = parse_families(args.families)
    spec = system.model_spec(args.terms, families.get("internal"), families.get("external"))
    rows = _load_rows(system, args, spec)

    if args.compare_families:
        table = pd.DataFrame(system.compare_families(rows, spec.terms))
        write_table(table, system.outputDir / "family_comparison.csv")
        _print_frame("Family comparison (AIC)", table)

    fit = system.fit(
        rows,
        spec,
        pValues="wald" if args.wald_pvalues else "lr",
        lrIntervals=not args.no_lr,
    )
    system.outputDir.mkdir(parents=True, exist_ok=True)
    fitPath = system.outputDir / "fit.json"
    fit.to_json(fitPath)
    _print_frame(
        f"Fit {fit.internal_family}/{fit.external_family}: loglik {fit.loglik:.4f}, AIC {fit.aic:.2f}",
        pd.DataFrame(fit.summary_rows()),
    )
    print(f"p-values: {fit.p_value_method}; wrote {fitPath}")

    if args.interaction:
        result = system.external_interaction_test(rows, spec, args.interaction)
        print(
            f"LR test of {', '.join(args.interaction)}: deviance {result['deviance']:.4f}, "
            f"df {result['df']}, p = {result['p_value']:.4g}"
        )

    if not fit.converged:
        print(f"Fit did not converge: {fit.message}")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_select(system: TransmissionStudySystem, args) -> int:
    families = parse_families(args.families)
    spec = system.model_spec(args.terms, families.get("internal"), families.get("external"))
    rows = _load_rows(system, args, spec)
    finalSpec, fit, trace = system.select(rows, spec, args.protect)

    system.outputDir.mkdir(parents=True, exist_ok=True)
    fit.to_json(system.outputDir / "fit.json")
    tracePath = system.outputDir / "selection_trace.json"
    tracePath.write_text(json.dumps([step.to_dict() for step in trace], indent=2), encoding="utf-8")

    for number, step in enumerate(trace, start=1):
        candidates = ", ".join(
            f"-{c['term']}: {c['aic']:.2f}" if c["aic"] is not None else f"-{c['term']}: failed"
            for c in step.candidates
        )
        print(f"Step {number}: AIC {step.current_aic:.2f} | {candidates or 'no candidates'}")
    print(f"Selected terms: {list(finalSpec.terms) or 'none'}")
    _print_frame(f"Selected model: AIC {fit.aic:.2f}", pd.DataFrame(fit.summary_rows()))
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def cmd_predict_sar(system: TransmissionStudySystem, args) -> int:
    fit = read_fit(args.fit)
    if not fit.converged:
        logger.error(f"{args.fit} holds a fit that did not converge: {fit.message}")
        return EXIT_NOT_CONVERGED
    sources, subjects = read_profiles(args.profiles)
    table = pd.DataFrame(system.predict_sar(fit, sources, subjects, args.infectious_period))
    write_table(table, system.outputDir / "sar.csv")
    _print_frame("Predicted secondary attack rates", table)
    return EXIT_OK


def cmd_replicate_study(system: TransmissionStudySystem, args) -> int:
    if args.designs or args.wiw_modes:
        study = replace(
            system.config.study,
            designs=args.designs or system.config.study.designs,
            wiwModes=args.wiw_modes or system.config.study.wiwModes,
        )
        system.config = replace(system.config, study=study)
    summary = system.replicate_study(args.replicates)
    wide = summary.pivot_table(
        index=["design", "wiw", "parameter"], columns="metric", values="value", sort=False
    ).reset_index()
    _print_frame("Replicate study summary", wide)
    print(f"Wrote {system.outputDir / 'summary.csv'}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select": cmd_select,
    "predict-sar": cmd_predict_sar,
    "replicate-study": cmd_replicate_study,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
    )
    try:
        system = TransmissionStudySystem(_load_config(args), outputDir=args.output_dir)
        return COMMANDS[args.command](system, args)
    except (ConfigError, SchemaError, UnknownCovariateError, InconsistentDataError) as e:
        logger.error(str(e))
        return EXIT_INPUT
    except TransmissionError as e:
        logger.error(str(e))
        return EXIT_FAILURE
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
