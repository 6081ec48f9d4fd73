"""CSV tables for evaluation, McNemar, importance and distribution results."""

from __future__ import annotations

import csv

from ..core import Trait
from .metrics import McNemarResult
from .protocols import EvalRun


def _write(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _kappa_cell(run: EvalRun) -> str:
    try:
        return f"{run.kappa:.2f}"
    except ValueError:
        return ""


def eval_table_rows(results) -> tuple[list[str], list[list[str]]]:
    """Wide table: one row per (population, method), accuracy % and kappa per trait.

    ``results`` is a list of (population, method, {Trait: EvalRun}).
    """
    header = ["population", "method"]
    for t in Trait:
        header += [f"{t.value}_acc", f"{t.value}_kappa"]
    rows = []
    for population, method, runs in results:
        row = [population, method]
        for t in Trait:
            run = runs.get(t)
            row += ["", ""] if run is None else [f"{100 * run.accuracy:.2f}", _kappa_cell(run)]
        rows.append(row)
    return header, rows


def write_eval_table(results, path) -> None:
    _write(path, *eval_table_rows(results))


MCNEMAR_HEADER = ["population", "trait", "method_a", "method_b", "b", "c", "n_pairs",
                  "statistic", "p_value", "exact", "no_discordant_pairs"]


def write_mcnemar(rows, path) -> None:
    """``rows``: (population, trait, method_a, method_b, McNemarResult)."""
    out = []
    for population, trait, a, b, res in rows:
        res: McNemarResult
        out.append([population, Trait(trait).value, a, b, res.b, res.c, res.n_pairs,
                    repr(res.statistic), repr(res.p_value), int(res.exact),
                    int(res.no_discordant_pairs)])
    _write(path, MCNEMAR_HEADER, out)


def write_predictions(runs, path) -> None:
    """Per-instance predictions of every run, in run then record order."""
    out = []
    for run in runs:
        for r in run.records:
            out.append([run.population, run.method, run.trait.value, r.participant_id,
                        r.repeat, r.fold, r.truth, r.pred])
    _write(path, ["population", "method", "trait", "participant_id", "repeat", "fold",
                  "truth", "pred"], out)


def write_importance(rows, path) -> None:
    out = []
    for row in rows:
        for c, w in row.weights.items():
            d = row.dominant_daytype.get(c)
            out.append([row.population, row.trait.value, c.value, repr(float(w)),
                        "" if d is None else d.value])
    _write(path, ["population", "trait", "category", "weight", "dominant_daytype"], out)


def write_distributions(rows, path) -> None:
    _write(path, ["country", "feature", "bin_left", "bin_right", "mass"],
           [[r.country, r.feature, repr(r.bin_left), repr(r.bin_right), repr(r.mass)]
            for r in rows])
