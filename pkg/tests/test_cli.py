import csv
import json

import pytest

from psychkit import irt
from psychkit.cli import main
from psychkit.report import clean, run_report


def read_json(path):
    return json.loads(path.read_text())


def test_missing_input_exit_code(capsys):
    assert main(["ctt"]) == 2
    assert "--input" in capsys.readouterr().err


def test_bad_file_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("student_id,grade,gender,Q1,Q2\na,3,g,1,7\n")
    assert main(["ctt", "--input", str(p)]) == 1
    assert "row 2, column Q2" in capsys.readouterr().err


def test_ctt_command(cohort_csv, tmp_path):
    data, cfg = cohort_csv
    out = tmp_path / "ctt.json"
    assert main(["ctt", "--input", str(data), "--config", str(cfg), "--out", str(out), "--csv", str(tmp_path / "norms")]) == 0
    rep = read_json(out)
    assert set(rep["groups"]) == {"3", "4", "5", "6"}
    g3 = rep["groups"]["3"]
    assert g3["reliability"]["n_items"] == 24
    rows = list(csv.reader((tmp_path / "norms" / "norms_grade_3.csv").open()))
    assert rows[0] == ["score", "z", "percentile"] and len(rows) == 26


def test_compare_command(cohort_csv, tmp_path):
    data, cfg = cohort_csv
    out = tmp_path / "cmp.json"
    assert main(["compare", "--input", str(data), "--config", str(cfg), "--factor", "grade", "--factor2", "gender", "--out", str(out)]) == 0
    tests = [r["test"] for r in read_json(out)]
    assert tests[0] == "one-way ANOVA"
    assert tests.count("Dunn") == 6
    assert "minimum detectable effect" in tests


def test_irt_pipeline(cohort_csv, tmp_path):
    data, cfg = cohort_csv
    model_path, eap_path = tmp_path / "m.json", tmp_path / "eap.csv"
    assert main(["irt", "fit", "--input", str(data), "--config", str(cfg), "--where", "grade=3",
                 "--model", "2pl", "--out", str(model_path), "--abilities-out", str(eap_path)]) == 0
    model = irt.IrtModel.load(model_path)
    assert model.kind == "2PL" and len(model.items) == 24 and model.n_students == 709
    assert read_json(model_path)["meta"]["excluded_items"] == ["Q2"]
    rows = list(csv.DictReader(eap_path.open()))
    assert len(rows) == 709 and set(rows[0]) == {"student_id", "grade", "gender", "eap", "posterior_sd"}

    curves = tmp_path / "curves.csv"
    assert main(["irt", "curves", "--model", str(model_path), "--out", str(curves), "--min", "-3", "--max", "3", "--step", "0.5"]) == 0
    lines = curves.read_text().splitlines()
    assert len(lines) == 14 and lines[0].endswith("TIF,SEM,reliability")

    wright = tmp_path / "wright.csv"
    assert main(["irt", "wright", "--model", str(model_path), "--abilities", str(eap_path), "--out", str(wright)]) == 0
    wrows = list(csv.DictReader(wright.open()))
    assert sum(int(r["value"]) for r in wrows if r["kind"] == "person") == 709
    assert sum(r["kind"] == "item" for r in wrows) == 24

    prof = tmp_path / "prof.json"
    assert main(["proficiency", "--model", str(model_path), "--abilities", str(eap_path), "--out", str(prof)]) == 0
    p = read_json(prof)
    assert p["levels"] and p["semantics"]
    assert sum(p["student_distribution"]["3"]) == pytest.approx(100.0)


def test_dif_command(cohort_csv, tmp_path):
    data, cfg = cohort_csv
    out = tmp_path / "dif.json"
    code = main(["dif", "--input", str(data), "--config", str(cfg), "--group", "grade",
                 "--reference", "3", "--focal", "4", "--methods", "mh,logistic", "--out", str(out)])
    assert code == 0
    rep = read_json(out)
    assert len(rep["synthesis"]) == 24
    assert set(rep["methods"]) == {"mh", "logistic"}


def test_report_empty_csv(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("student_id,grade,gender,Q1,Q2\n")
    rep, code = run_report(p, None, tmp_path / "out")
    assert code == 1
    assert len(rep["failures"]) == 1 and rep["failures"][0]["module"] == "dataset"
    assert (tmp_path / "out" / "failures.json").exists()
    assert main(["report", "--input", str(p), "--out", str(tmp_path / "out2")]) == 1


def test_clean_handles_nan_and_numpy():
    import numpy as np

    out = clean({"a": np.float64("nan"), "b": np.arange(3), "c": (np.int64(4), float("inf"))})
    assert out == {"a": None, "b": [0, 1, 2], "c": [4, None]}
    json.dumps(out, allow_nan=False)
