import json

import numpy as np
import pytest

from mcudi.cli import EXIT_DATA, EXIT_OK, EXIT_SCHEMA, EXIT_USAGE, main
from mcudi.reports import read_jsonl


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    spec = write_json(out / "spec.json", {"preset": "churn", "seed": 4, "n_periods": 4,
                                          "rows_per_period": 300, "drift_periods": [2]})
    assert main(["synth", "--spec", str(spec), "--output-dir", str(out / "data")]) == EXIT_OK
    cfg = json.loads((out / "data" / "run_config.json").read_text())
    cfg["hyperparams"]["n_trees"] = 10
    cfg["seeds"] = [0, 1, 2]
    write_json(out / "cfg.json", cfg)
    return out


def run(synth_dir, command, out, *extra):
    return main([command, "--config", str(synth_dir / "cfg.json"),
                 "--csv", str(synth_dir / "data" / "synthetic.csv"),
                 "--output-dir", str(out), *extra])


def test_synth_writes_csv_ledger_and_config(synth_dir):
    data = synth_dir / "data"
    ledger = json.loads((data / "ledger.json").read_text())
    assert ledger["concept_drift_periods"] == [2]
    assert ledger["rows_per_period"] == [300] * 4
    lines = (data / "synthetic.csv").read_text().splitlines()
    assert lines[0] == "f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,failure,timestamp"
    assert len(lines) == 1 + 1200
    cfg = json.loads((data / "run_config.json").read_text())
    assert cfg["schema"]["label_column"] == "failure"


def test_synth_is_reproducible(synth_dir, tmp_path):
    spec = synth_dir / "spec.json"
    assert main(["synth", "--spec", str(spec), "--output-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "synthetic.csv").read_bytes() == \
        (synth_dir / "data" / "synthetic.csv").read_bytes()


def test_ground_truth_outputs_and_byte_identity(synth_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(synth_dir, "ground-truth", a) == EXIT_OK
    assert run(synth_dir, "ground-truth", b) == EXIT_OK
    for name in ("ground_truth.jsonl", "ground_truth.txt", "severity_series.jsonl",
                 "ingestion.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    truth = read_jsonl(a / "ground_truth.jsonl")
    assert [r["period_id"] for r in truth] == [1, 2, 3]
    assert truth[1]["is_drift"] is True
    effective = json.loads((a / "run_config.json").read_text())
    assert effective["alpha"] == 0.05 and effective["folds"] == 10
    assert effective["seeds"] == [0, 1, 2]
    assert effective["output_dir"] == str(a)
    series = read_jsonl(a / "severity_series.jsonl")
    assert set(series[0]) >= {"mean_severity", "changed_fraction", "changed_features"}


def test_evaluate_with_saved_ground_truth(synth_dir, tmp_path):
    assert run(synth_dir, "ground-truth", tmp_path) == EXIT_OK
    code = run(synth_dir, "evaluate", tmp_path, "--detectors", "periodic",
               "--ground-truth", str(tmp_path / "ground_truth.jsonl"))
    assert code == EXIT_OK
    acc = {r["detector"]: r for r in read_jsonl(tmp_path / "detection_accuracy.jsonl")}
    assert list(acc) == ["static", "periodic"]
    assert (acc["periodic"]["specificity"], acc["periodic"]["sensitivity"]) == (1.0, 0.0)
    runs = {r["strategy"]: r for r in read_jsonl(tmp_path / "strategies.jsonl")}
    assert runs["static"]["retrain_count"] == 0
    assert runs["static"]["retrains"] == "0.0/3"
    assert runs["periodic"]["retrains"] == "3.0/3"
    assert (tmp_path / "auc_series.jsonl").exists()


def test_evaluate_contrasts_mcudi_with_ks(synth_dir, tmp_path):
    assert run(synth_dir, "evaluate", tmp_path, "--detectors", "mcudi,ks") == EXIT_OK
    acc = {r["detector"]: r for r in read_jsonl(tmp_path / "detection_accuracy.jsonl")}
    assert list(acc) == ["static", "periodic", "ks", "mcudi"]
    assert acc["mcudi"]["sensitivity"] > acc["ks"]["sensitivity"]
    assert (tmp_path / "ground_truth.jsonl").exists()


def test_label_cost(synth_dir, tmp_path):
    assert run(synth_dir, "label-cost", tmp_path) == EXIT_OK
    rec = json.loads((tmp_path / "label_cost.json").read_text())
    assert rec["periodic"]["label_cost"] == 900
    assert rec["savings"] == rec["periodic"]["label_cost"] - np.mean(rec["mcudi"]["label_costs"])
    log = read_jsonl(tmp_path / "label_cost_verdicts.jsonl")
    for i, seed in enumerate(rec["mcudi"]["seeds"]):
        quiet = sum(r["n_samples"] for r in log if r["seed"] == seed and not r["alarm"])
        assert rec["savings_per_seed"][i] == quiet


def test_single_class_second_period_is_excluded(tmp_path):
    rng = np.random.default_rng(0)
    rows = ["x1,x2,label,day"]
    for i in range(40):
        rows.append(f"{rng.normal()},{rng.normal()},{i % 2},2020-05-01")
    for i in range(40):
        rows.append(f"{rng.normal()},{rng.normal()},0,2020-05-02")
    (tmp_path / "d.csv").write_text("\n".join(rows) + "\n")
    write_json(tmp_path / "c.json", {
        "schema": {"feature_columns": ["x1", "x2"], "label_column": "label",
                   "period_column": "day"},
        "hyperparams": {"n_trees": 5}, "seeds": [0, 1]})
    code = main(["ground-truth", "--config", str(tmp_path / "c.json"),
                 "--csv", str(tmp_path / "d.csv"), "--output-dir", str(tmp_path / "o")])
    assert code == EXIT_OK
    (rec,) = read_jsonl(tmp_path / "o" / "ground_truth.jsonl")
    assert rec["excluded"] is True
    assert rec["reason"] == "single-class testing period"
    assert "excluded" in (tmp_path / "o" / "ground_truth.txt").read_text()


def test_exit_codes(synth_dir, tmp_path, capsys):
    assert run(synth_dir, "evaluate", tmp_path, "--detectors", "adwin") == EXIT_USAGE
    assert "adwin" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["evaluate"])
    assert exc.value.code == EXIT_USAGE

    bad_cfg = json.loads((synth_dir / "cfg.json").read_text())
    bad_cfg["schema"]["feature_columns"].append("f99")
    write_json(tmp_path / "bad.json", bad_cfg)
    code = main(["ground-truth", "--config", str(tmp_path / "bad.json"),
                 "--csv", str(synth_dir / "data" / "synthetic.csv"),
                 "--output-dir", str(tmp_path)])
    assert code == EXIT_SCHEMA
    assert "f99" in capsys.readouterr().err

    (tmp_path / "empty.csv").write_text("")
    code = main(["ground-truth", "--config", str(synth_dir / "cfg.json"),
                 "--csv", str(tmp_path / "empty.csv"), "--output-dir", str(tmp_path)])
    assert code == EXIT_DATA
    code = main(["ground-truth", "--config", str(synth_dir / "cfg.json"),
                 "--csv", str(tmp_path / "nope.csv"), "--output-dir", str(tmp_path)])
    assert code == EXIT_DATA

    write_json(tmp_path / "spec.json", {"n_features": 3, "n_periods": 2, "rows_per_period": 5,
                                        "label_features": [0],
                                        "injections": [{"period": 1, "features": [5],
                                                        "magnitude": 1.0}]})
    code = main(["synth", "--spec", str(tmp_path / "spec.json"), "--output-dir", str(tmp_path)])
    assert code == EXIT_USAGE
    code = main(["ground-truth", "--config", str(tmp_path / "missing.json"),
                 "--csv", "x.csv", "--output-dir", str(tmp_path)])
    assert code == EXIT_USAGE
