import csv
import hashlib
import json
import subprocess
import sys

import pytest

from mobipersona.cli import main

TINY = {
    "synth": {"country_counts": {"UK": 7, "ES": 10, "PE": 6, "CO": 6, "CL": 6},
              "study_days": 7, "sample_minutes": 60, "bursts_per_day": 6},
    "forest": {"n_trees": 5},
    "rfe": {"target_k": 20, "drop_frac": 0.3},
    "evaluate": {"populations": ["all", "gender_balanced", "student"], "method1_repeats": 2,
                 "method2_repeats": 2, "balance_repeats": 2},
    "importance": {"populations": ["all"]},
    "distributions": {"top_k": 2, "bins": 5},
}
STAGES = ("synth", "features", "label", "impute", "evaluate", "importance", "distributions")


def _config(tmp_path, **changes):
    data = json.loads(json.dumps(TINY))
    data.update(changes)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def _checksums(out):
    return {str(p.relative_to(out)): hashlib.md5(p.read_bytes()).hexdigest()
            for p in sorted(out.rglob("*")) if p.is_file()}


def _run_all(config, out, workers=1):
    for stage in STAGES:
        code = main([stage, "--config", str(config), "--out", str(out), "--seed", "3",
                     "--workers", str(workers)])
        assert code == 0, stage


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    config = _config(tmp)
    out = tmp / "out"
    _run_all(config, out)
    return config, out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_every_stage_writes_its_artifacts(pipeline):
    _, out = pipeline
    for name in ("cohort/manifest.csv", "cohort/ground_truth.csv", "features.csv",
                 "extraction_report.csv", "labels.csv", "label_summary.csv", "imputed.csv",
                 "impute_report.csv", "eval_table.csv", "results_all.csv",
                 "results_gender.csv", "results_students.csv", "mcnemar.csv",
                 "predictions.csv", "importance.csv", "feature_importance.csv",
                 "distributions.csv"):
        assert (out / name).is_file(), name
    for stage in STAGES:
        echoed = json.loads((out / f"config.{stage}.json").read_text())
        assert echoed["seed"] == 3 and echoed["forest"]["n_trees"] == 5


def test_feature_matrix_shape(pipeline):
    _, out = pipeline
    rows = _rows(out / "features.csv")
    assert len(rows) == 35 and len(rows[0]) == 283


def test_eval_table_reports_accuracy_and_kappa(pipeline):
    _, out = pipeline
    with open(out / "eval_table.csv") as fh:
        header = next(csv.reader(fh))
    assert any("acc" in h.lower() for h in header) and any("kappa" in h.lower() for h in header)
    pops = {r["population"] for r in _rows(out / "eval_table.csv")}
    assert pops == {"all", "gender_balanced", "student"}


def test_importance_rows_sum_to_one(pipeline):
    _, out = pipeline
    totals = {}
    for r in _rows(out / "importance.csv"):
        key = (r["population"], r["trait"])
        totals[key] = totals.get(key, 0.0) + float(r["weight"])
    assert len(totals) == 5
    assert all(abs(v - 1.0) < 1e-9 for v in totals.values())


def test_extraction_missing_rates_follow_dropout(pipeline):
    _, out = pipeline
    from mobipersona.synth import DEFAULT_OPT_OUT
    rates = {r["category"]: float(r["missing_rate"]) for r in _rows(out / "extraction_report.csv")}
    for cat, p in DEFAULT_OPT_OUT.items():
        assert abs(rates[cat.value] - p) <= 0.05


def test_rerun_is_byte_identical_for_any_worker_count(pipeline):
    config, out = pipeline
    before = _checksums(out)
    _run_all(config, out, workers=2)
    assert _checksums(out) == before


def test_unknown_key_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"forest": {"n_treez": 3}}))
    assert main(["synth", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "forest.n_treez" in capsys.readouterr().err


def test_missing_prerequisite_exits_two(tmp_path):
    assert main(["impute", "--out", str(tmp_path)]) == 2


def test_bad_flag_exits_two(tmp_path):
    assert main(["evaluate", "--method", "method9", "--out", str(tmp_path)]) == 2


def test_empty_cohort_exits_two(tmp_path, pipeline):
    _, out = pipeline
    lines = (out / "cohort/manifest.csv").read_text().splitlines()
    empty = tmp_path / "manifest.csv"
    empty.write_text("\n".join(lines[:3]) + "\n")
    assert main(["features", "--manifest", str(empty), "--out", str(tmp_path)]) == 2


def test_corrupt_log_exits_one_naming_participant(tmp_path, pipeline, capsys):
    config, out = pipeline
    work = tmp_path / "copy"
    assert main(["synth", "--config", str(config), "--out", str(work), "--seed", "3"]) == 0
    victim = sorted((work / "cohort/logs").iterdir())[0]
    victim.write_text("garbage\n" * 5)
    assert main(["features", "--config", str(config), "--out", str(work)]) == 1
    assert victim.stem in capsys.readouterr().err


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "mobipersona", "--help"], capture_output=True,
                          text=True)
    assert done.returncode == 0 and "synth" in done.stdout
