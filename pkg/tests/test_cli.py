"""Command-line interface round trips."""

import json

import numpy as np

from partcl.cli import main
from partcl.inference import infer_full
from partcl.problems import build_grid


def test_validate_reports_shape(tmp_path, capsys):
    out = tmp_path / "grid.json"
    main(["export-problem", "--problem", "grid", "--out", str(out)])
    capsys.readouterr()
    assert main(["validate", "--problem", str(out)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["valid"] and doc["features"] == 24

def test_validate_rejects_garbage(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "partcl-problem", "version": 1, "variables": '
                   '[{"name": "a", "domain": [0, 1]}], "features": [], '
                   '"parts": []}')
    assert main(["validate", "--problem", str(bad)]) == 1


def test_certify_local_optimum(tmp_path, capsys):
    grid = build_grid()
    opt = infer_full(grid, np.ones(24))
    wfile = tmp_path / "w.json"
    wfile.write_text(json.dumps({"w": [1.0] * 24}))
    xfile = tmp_path / "x.json"
    xfile.write_text(json.dumps({"values": list(opt.config.values)}))
    rc = main(["certify", "--problem", "grid", "--weights", str(wfile),
               "--config", str(xfile)])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 0 and doc["locally_optimal"]

    xfile.write_text(json.dumps({"values": [0] * 16}))
    rc = main(["certify", "--problem", "grid", "--weights", str(wfile),
               "--config", str(xfile)])
    doc = json.loads(capsys.readouterr().out)
    assert rc == 3 and not doc["locally_optimal"]
    assert doc["witness"]["part"] == "b00"


def test_dump_gai(capsys):
    assert main(["dump-gai", "--problem", "grid"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["ordering"] == ["b00", "b01", "b10", "b11"]
    assert [len(s["J"]) for s in doc["subsets"]] == [4, 6, 6, 8]


def test_dump_gai_custom_ordering(capsys):
    assert main(["dump-gai", "--problem", "grid",
                 "--ordering", "b11,b10,b01,b00"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["ordering"] == ["b11", "b10", "b01", "b00"]
    assert [len(s["J"]) for s in doc["subsets"]] == [4, 6, 6, 8]


def test_run_with_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"problem": "grid", "algo": "pcl",
                               "alpha": 0.5, "users": 2, "iters": 5,
                               "seed": 3, "out": str(tmp_path / "out")}))
    rc = main(["run", "--config", str(cfg), "--iters", "4"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["iterations"] == 4  # flag wins over the config file
    assert doc["users"] == 2
    csvs = list((tmp_path / "out").glob("*.csv"))
    assert len(csvs) == 1
    header = csvs[0].read_text().splitlines()[0]
    assert header.startswith("algorithm,user_id,t,part,regret")


def test_run_rejects_unknown_config_keys(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"problem": "grid", "bogus": 1}))
    assert main(["run", "--config", str(cfg)]) == 2
