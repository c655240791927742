import json

import numpy as np
import pytest

from matrix_conformal import (
    GraphonSpec,
    mask_mcar,
    observe,
    sample_instance,
    write_matrix_csv,
)
from matrix_conformal.cli import main
from matrix_conformal.harness import RECORDS_HEADER


def make_matrix_csv(path, n=10, m0=0, seed=3, graphon="f1"):
    inst = sample_instance(GraphonSpec(graphon, n, xi_target=0.5, seed=seed))
    mask = mask_mcar(n, m0, seed=seed) if m0 else np.zeros((n + 1, n + 1), bool)
    obs = observe(inst, mask)
    write_matrix_csv(path, obs)
    return obs


def test_predict_fully_observed_single_hole(tmp_path, capsys):
    path = tmp_path / "m.csv"
    obs = make_matrix_csv(path)
    rc = main([
        "predict", str(path), "--row", "10", "--col", "9",
        "--method", "alg1", "--grid-points", "101", "--format", "json",
        "--bound", "4.4",
    ])
    assert rc == 0
    out = capsys.readouterr()
    report = json.loads(out.out)
    assert report["intervals"]
    for lo, hi in report["intervals"]:
        assert -4.4 <= lo <= hi <= 4.4
    assert "independently" in out.err  # fixed-target contract warning


def test_predict_arbitrary_entry_is_relabeled(tmp_path, capsys):
    path = tmp_path / "m.csv"
    make_matrix_csv(path, n=8)
    rc = main([
        "predict", str(path), "--row", "2", "--col", "5",
        "--grid-points", "81", "--format", "json", "--bound", "4.4",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["entry"] == [2, 5]
    assert report["total_length"] > 0


def test_predict_alg2_verbose_reports_tau(tmp_path, capsys):
    path = tmp_path / "m.csv"
    make_matrix_csv(path, n=10, m0=4)
    rc = main([
        "predict", str(path), "--row", "10", "--col", "9", "--method", "alg2",
        "--grid-points", "101", "--format", "json", "--verbose", "--bound", "4.4",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["tau"]) == 10
    assert all(t >= 0 for t in report["tau"])


def test_predict_trivial_when_target_row_heavily_missing(tmp_path, capsys):
    # enough missing responses force the full-range prediction
    inst = sample_instance(GraphonSpec("f1", 12, xi_target=0.5, seed=8))
    order = 13
    mask = np.zeros((order, order), bool)
    for j in (0, 2, 4):
        mask[order - 1, j] = mask[j, order - 1] = True
    obs = observe(inst, mask)
    path = tmp_path / "m.csv"
    write_matrix_csv(path, obs)
    rc = main([
        "predict", str(path), "--row", "12", "--col", "11", "--method", "alg2",
        "--format", "json", "--bound", "4.4",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["is_trivial"] is True
    assert report["intervals"] == [[-4.4, 4.4]]


def test_predict_malformed_csv_exits_nonzero(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("0,1,2\n1,zzz,0\n2,0,0\n")
    rc = main(["predict", str(path), "--row", "0", "--col", "1"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "row 2" in err and "column 2" in err


def test_predict_bound_violation(tmp_path, capsys):
    path = tmp_path / "m.csv"
    make_matrix_csv(path)
    rc = main(["predict", str(path), "--row", "10", "--col", "9", "--bound", "0.5"])
    assert rc == 1
    assert "bound" in capsys.readouterr().err


def test_simulate_minimal_config(tmp_path, capsys):
    out = tmp_path / "records.csv"
    config = {
        "graphons": ["f1"],
        "n_values": [8],
        "xi_targets": [0.5],
        "replications": 2,
        "method": "alg2",
        "grid_points": 41,
        "master_seed": 1,
        "out": str(out),
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    rc = main(["simulate", str(cfg), "--workers", "1"])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == RECORDS_HEADER
    assert len(lines) == 3  # header + 2 records
    assert (tmp_path / "records.summary.csv").exists()


def test_simulate_unknown_graphon_names_field(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"graphons": ["f8"], "out": "x.csv"}))
    rc = main(["simulate", str(cfg)])
    assert rc == 1
    err = capsys.readouterr().err
    assert "graphons" in err and "f8" in err


def test_summarize_command(tmp_path, capsys):
    out = tmp_path / "records.csv"
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "graphons": ["f1"], "n_values": [8], "xi_targets": [0.4],
        "replications": 2, "method": "alg1", "iter_max": 1,
        "grid_points": 41, "out": str(out),
    }))
    assert main(["simulate", str(cfg), "--workers", "1"]) == 0
    capsys.readouterr()
    summary_out = tmp_path / "s.csv"
    assert main(["summarize", str(out), "--out", str(summary_out)]) == 0
    text = summary_out.read_text()
    assert text.startswith("graphon,")
    assert "f1" in text
