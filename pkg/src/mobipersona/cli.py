"""Command line front end: one subcommand per pipeline stage.

Every stage reads the previous stage's files from the output directory and
writes its own, along with the effective configuration it ran with. Exit codes:
0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import BALANCED_POPULATIONS, RunConfig
from .core import Trait, trait_class_labels
from .errors import ConfigError, EmptyCohort, MobiPersonaError
from .eval.importance import feature_distributions, importance_by_category
from .eval.metrics import mcnemar
from .eval.protocols import (METHOD1, METHOD2, evaluate_balanced, population_filter,
                             run_method)
from .eval.report import (eval_table_rows, write_distributions, write_importance, write_mcnemar,
                          write_predictions)
from .features.extract import extract_manifest, extraction_report, write_report
from .impute import drop_all_missing_columns, filter_missingness, iterative_impute
from .ingest import parse_manifest
from .matrix import CohortMatrix, read_matrix, write_matrix
from .psychometrics import score_traits
from .synth import generate, write_cohort

log = logging.getLogger("mobipersona")

COMMANDS = ("synth", "features", "label", "impute", "evaluate", "importance", "distributions")

# Evaluation populations grouped the way the result tables are laid out.
RESULT_TABLES = {
    "results_all.csv": ("all",),
    "results_gender.csv": ("gender_balanced", "female", "male"),
    "results_age.csv": ("age_balanced",),
    "results_students.csv": ("student", "non_student"),
}


class UsageError(Exception):
    """Problem with the invocation or with prerequisite files; exit code 2."""


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise UsageError(f"{path} not found; run the '{stage}' stage first")
    return path


def _echo_config(cfg: RunConfig, command: str) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / f"config.{command}.json").write_text(cfg.to_json())


def _manifest(cfg: RunConfig):
    return parse_manifest(_require(cfg.manifest_path, "synth"))


def _attach(matrix: CohortMatrix, participants) -> CohortMatrix:
    """Re-attach demographic records to a matrix read back from disk."""
    by_id = {p.id: p for p in participants}
    missing = [pid for pid in matrix.participant_ids if pid not in by_id]
    if missing:
        raise ConfigError(f"matrix rows not in manifest: {missing[:3]}")
    return CohortMatrix(matrix.participant_ids, matrix.feature_names, matrix.values,
                        participants=tuple(by_id[pid] for pid in matrix.participant_ids))


def _read_labels(path: Path) -> dict[str, dict[Trait, int]]:
    with open(_require(path, "label"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {r["participant_id"]: {t: int(r[f"{t.value}_class"]) for t in Trait} for r in rows}


def _labelled_matrix(cfg: RunConfig) -> CohortMatrix:
    manifest = _manifest(cfg)
    matrix = _attach(read_matrix(_require(cfg.out / "imputed.csv", "impute")),
                     manifest.participants)
    labels = _read_labels(cfg.out / "labels.csv")
    missing = [pid for pid in matrix.participant_ids if pid not in labels]
    if missing:
        raise UsageError(f"no labels for {missing[:3]}; rerun the 'label' stage")
    return matrix.with_labels({t: [labels[pid][t] for pid in matrix.participant_ids]
                               for t in Trait})


# Stages ----------------------------------------------------------------------------

def cmd_synth(cfg: RunConfig, workers: int) -> None:
    cohort = generate(cfg.generator(), workers=workers)
    path = write_cohort(cohort, cfg.out / "cohort")
    log.info("wrote %d participants to %s", len(cohort.participants), path)


def cmd_features(cfg: RunConfig, workers: int) -> None:
    manifest = _manifest(cfg)
    if not manifest.entries:
        raise EmptyCohort("the manifest lists no participants")
    matrix, results = extract_manifest(manifest, cfg.feature_config(), workers=workers)
    write_matrix(matrix, cfg.out / "features.csv")
    write_report(extraction_report(manifest.participants, results),
                 cfg.out / "extraction_report.csv")
    log.info("extracted %d x %d features", *matrix.values.shape)


def cmd_label(cfg: RunConfig, workers: int) -> None:
    participants = _manifest(cfg).participants
    if len(participants) < 2:
        raise EmptyCohort("labelling needs at least two participants")
    scores = [score_traits(p.responses) for p in participants]
    splits = {t: trait_class_labels(scores, t) for t in Trait}
    header = ["participant_id"]
    for t in Trait:
        header += [f"{t.value}_score", f"{t.value}_class"]
    rows = []
    for i, (p, s) in enumerate(zip(participants, scores)):
        row = [p.id]
        for t in Trait:
            row += [s[t], int(splits[t].labels[i])]
        rows.append(row)
    _write_csv(cfg.out / "labels.csv", header, rows)
    _write_csv(cfg.out / "label_summary.csv", ["trait", "median", "n_low", "n_high"],
               [[t.value, repr(sp.median), sp.n_low, sp.n_high] for t, sp in splits.items()])


def cmd_impute(cfg: RunConfig, workers: int) -> None:
    manifest = _manifest(cfg)
    matrix = _attach(read_matrix(_require(cfg.out / "features.csv", "features")),
                     manifest.participants)
    p = cfg.data["impute"]
    kept, freport = filter_missingness(matrix, float(p["threshold"]))
    kept, dropped = drop_all_missing_columns(kept)
    filled, ireport = iterative_impute(kept, max_sweeps=int(p["max_sweeps"]),
                                       tol=float(p["tol"]), clip=bool(p["clip"]))
    write_matrix(filled, cfg.out / "imputed.csv")
    rows = [["retained", c, k, n] for c, (k, n) in sorted(freport.retention_by_country.items())]
    rows += [["dropped_participant", pid, "", ""] for pid in freport.dropped]
    rows += [["dropped_column", name, "", ""] for name in dropped]
    rows += [["sweep", i + 1, repr(ch), ""] for i, ch in enumerate(ireport.max_changes)]
    rows += [["converged", int(ireport.converged), "", ""]]
    _write_csv(cfg.out / "impute_report.csv", ["kind", "key", "value", "total"], rows)


def _evaluate_population(cfg: RunConfig, matrix: CohortMatrix, population: str,
                         methods, workers: int) -> dict:
    ev = cfg.data["evaluate"]
    settings = cfg.model_settings()
    if population in BALANCED_POPULATIONS:
        return evaluate_balanced(matrix, BALANCED_POPULATIONS[population], settings=settings,
                                 repeats=int(ev["balance_repeats"]), seed=cfg.seed,
                                 methods=methods, workers=workers)
    sub = population_filter(matrix, population)
    repeats = {METHOD1: int(ev["method1_repeats"]), METHOD2: int(ev["method2_repeats"])}
    return {m: run_method(m, sub, settings=settings, repeats=repeats[m], seed=cfg.seed,
                          population=population, workers=workers) for m in methods}


def cmd_evaluate(cfg: RunConfig, workers: int) -> None:
    matrix = _labelled_matrix(cfg)
    methods = list(cfg.data["evaluate"]["methods"])
    results, runs, tests = [], [], []
    for population in cfg.data["evaluate"]["populations"]:
        by_method = _evaluate_population(cfg, matrix, population, methods, workers)
        for m in methods:
            results.append((population, m, by_method[m]))
            runs.extend(by_method[m].values())
        if METHOD1 in by_method and METHOD2 in by_method:
            tests.extend((population, t, METHOD2, METHOD1,
                          mcnemar(by_method[METHOD2][t], by_method[METHOD1][t])) for t in Trait)
    header, rows = eval_table_rows(results)
    _write_csv(cfg.out / "eval_table.csv", header, rows)
    for name, pops in RESULT_TABLES.items():
        subset = [r for r in rows if r[0] in pops]
        if subset:
            _write_csv(cfg.out / name, header, subset)
    write_mcnemar(tests, cfg.out / "mcnemar.csv")
    write_predictions(runs, cfg.out / "predictions.csv")


def cmd_importance(cfg: RunConfig, workers: int) -> None:
    matrix = _labelled_matrix(cfg)
    p = cfg.data["importance"]
    rows = []
    for population in p["populations"]:
        sub = population_filter(matrix, population)
        rows.extend(importance_by_category(sub, t, cfg.model_settings(), cfg.seed, population,
                                           p["aggregate"], workers) for t in Trait)
    write_importance(rows, cfg.out / "importance.csv")
    _write_csv(cfg.out / "feature_importance.csv", ["population", "trait", "feature", "importance"],
               [[r.population, r.trait.value, name, repr(float(w))]
                for r in rows for name, w in r.feature_importance.items()])


def _top_features(cfg: RunConfig, k: int) -> list[str]:
    path = _require(cfg.out / "feature_importance.csv", "importance")
    totals: dict[str, float] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            if r["population"] == "all":
                totals[r["feature"]] = totals.get(r["feature"], 0.0) + float(r["importance"])
    if not totals:
        raise UsageError("feature_importance.csv has no rows for population 'all'")
    return sorted(totals, key=lambda n: (-totals[n], n))[:k]


def cmd_distributions(cfg: RunConfig, workers: int) -> None:
    p = cfg.data["distributions"]
    manifest = _manifest(cfg)
    matrix = _attach(read_matrix(_require(cfg.out / "features.csv", "features")),
                     manifest.participants)
    names = p["features"] or _top_features(cfg, int(p["top_k"]))
    write_distributions(feature_distributions(matrix, names, int(p["bins"])),
                        cfg.out / "distributions.csv")


STAGES = {
    "synth": cmd_synth,
    "features": cmd_features,
    "label": cmd_label,
    "impute": cmd_impute,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
    "distributions": cmd_distributions,
}


# Entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobipersona",
                                     description="Personality classification from phone sensing data.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--manifest", type=Path, help="cohort manifest (default <out>/cohort)")
        p.add_argument("--population", action="append",
                       help="restrict evaluate/importance to this population (repeatable)")
        p.add_argument("--method", action="append", choices=[METHOD1, METHOD2],
                       help="restrict evaluate to this method (repeatable)")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["paths.out"] = str(args.out)
    if args.manifest is not None:
        changes["paths.manifest"] = str(args.manifest)
    if args.method:
        changes["evaluate.methods"] = list(dict.fromkeys(args.method))
    if args.population:
        section = "importance" if args.command == "importance" else "evaluate"
        changes[f"{section}.populations"] = list(dict.fromkeys(args.population))
    return cfg.with_overrides(**changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = resolve_config(args)
        _echo_config(cfg, args.command)
        STAGES[args.command](cfg, args.workers)
    except (ConfigError, UsageError, EmptyCohort) as exc:
        print(f"mobipersona {args.command}: {exc}", file=sys.stderr)
        return 2
    except (MobiPersonaError, OSError) as exc:
        print(f"mobipersona {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
