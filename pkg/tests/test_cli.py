from __future__ import annotations

import json
import subprocess
import sys

import pytest

from nilrado.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.fixture
def sampled(tmp_path):
    paths = []
    for seed in (1, 2):
        p = tmp_path / f"g{seed}.json"
        assert main(["graph", "sample", "--ell", "3", "--flavor", "odd", "--supply", "40", "--max-f", "2",
                     "--cap", "2", "--seed", str(seed), "-o", str(p)]) == 0
        paths.append(p)
    return paths


def test_sample_and_validate(sampled, capsys):
    code, out = run(capsys, "graph", "validate", str(sampled[0]))
    assert code == 0 and json.loads(out)["ok"]
    code, out = run(capsys, "graph", "validate", str(sampled[0]), "--summary")
    assert out.startswith("0 violations")


def test_validate_reports_violations(sampled, capsys):
    obj = json.loads(sampled[0].read_text())
    key = "inf1|v0000"
    obj["labels"][key] = (obj["labels"][key] + 1) % 3
    del obj["labels"]["v0001|v0002"]
    bad = sampled[0].with_name("bad.json")
    bad.write_text(json.dumps(obj))
    code, out = run(capsys, "graph", "validate", str(bad), "--compact")
    res = json.loads(out)
    assert code == 1 and not res["ok"]
    assert any("missing label" in v for v in res["violations"])


def test_iso_between_independent_samples_fails_with_nonzero_exit(sampled, capsys):
    code, out = run(capsys, "iso", str(sampled[0]), str(sampled[1]), "--rounds", "30")
    res = json.loads(out)
    assert code == 1 and res["failure"] is not None and res["discrepancies"] == []


def test_iso_of_a_graph_with_itself(sampled, capsys):
    code, out = run(capsys, "iso", str(sampled[0]), str(sampled[0]), "--rounds", "6", "--summary")
    assert code == 0 and "complete" in out


def test_group_commands(tmp_path, capsys):
    p = tmp_path / "small.json"
    assert main(["graph", "sample", "--ell", "2", "--flavor", "two-reciprocity", "--supply", "2", "--max-f",
                 "2", "--cap", "2", "--seed", "0", "-o", str(p)]) == 0
    code, out = run(capsys, "group", "axioms", str(p))
    assert code == 0 and json.loads(out)["axioms"]["ok"]
    code, out = run(capsys, "group", "roundtrip", str(p), "--method", "both")
    assert code == 0 and json.loads(out)["roundtrip_exact"]
    code, out = run(capsys, "group", "reconstruct", str(p))
    assert json.loads(out)["reconstruction"]["equals_parity_row"]
    x = json.dumps({"rho": {"v0000": 1}})
    y = json.dumps({"rho": {"v0001": 1}})
    code, out = run(capsys, "group", "multiply", str(p), "--x", x, "--y", y)
    assert json.loads(out)["product"]["rho"] == {"v0000": 1, "v0001": 1}


def test_cohom_commands(capsys):
    code, out = run(capsys, "cohom", "census", "--ell", "2", "--exps", "1,1", "--coeff", "1")
    assert code == 0 and json.loads(out)["H2"] == 8
    code, out = run(capsys, "cohom", "census", "--ell", "3", "--exps", "1", "--summary")
    assert out.startswith("|H2| = 3")
    code, out = run(capsys, "cohom", "carry", "--ell", "3", "--f", "2", "--g", "4")
    assert code == 0 and json.loads(out)["class_order"] == 9
    code, _ = run(capsys, "cohom", "census", "--ell", "3", "--exps", "1,2", "--bound", "10")
    assert code == 1


def test_field_graph_and_probe(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NILRADO_CACHE", str(tmp_path / "cache"))
    out_path = tmp_path / "f.json"
    code = main(["field", "graph", "--d", "-11", "--ell", "2", "--bound", "300", "--cap", "2",
                 "-o", str(out_path)])
    assert code == 0
    obj = json.loads(out_path.read_text())
    assert obj["provenance"]["violations"] == [] and obj["provenance"]["d"] == -11
    assert list((tmp_path / "cache").iterdir())
    code, out = run(capsys, "field", "graph", "--d", "-11", "--ell", "2", "--bound", "300", "--cap", "2",
                    "--summary")
    assert "0 violations" in out
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"S": ["inf1", "inf2"], "n": 1, "alpha": 1, "out": {"inf1": 0, "inf2": 0},
                             "in": {"inf1": 0, "inf2": 1}}))
    code, out = run(capsys, "field", "probe", "--graph", str(out_path), "--query", str(q), "--bound", "1000")
    assert code == 0 and json.loads(out)["witness"] == "p23+"
    code, _ = run(capsys, "field", "graph", "--d", "-7", "--ell", "2", "--bound", "100")
    assert code == 1


def test_local_hilbert(capsys):
    code, out = run(capsys, "local", "hilbert", "--check-table")
    assert code == 0 and json.loads(out)["table"] == [[1, 1, 0], [1, 0, 0], [0, 0, 0]]


def test_experiments_exit_codes(capsys):
    code, out = run(capsys, "experiment", "reciprocity", "--d1", "-11", "--bound", "800", "--seed", "0",
                    "--summary")
    assert code == 0 and "[PASS] criterion 6" in out
    code, out = run(capsys, "experiment", "reciprocity", "--d1", "-11", "--bound", "800", "--seed", "0",
                    "--flip", "p3+", "--compact")
    assert code == 1 and json.loads(out)["ok"] is False
    code, out = run(capsys, "experiment", "field-iso", "--d1", "-11", "--d2", "-7", "--seed", "0")
    assert code == 1 and json.loads(out)["aggregate"]["scanned"] == 0
    code, out = run(capsys, "experiment", "prob1", "--ell", "3", "--supply", "50", "--max-f", "1",
                    "--trials", "2", "--queries", "20", "--seed", "3")
    assert json.loads(out)["schema"] == "nilrado.report/1"


def test_seed_is_mandatory(capsys):
    with pytest.raises(SystemExit):
        main(["experiment", "prob1"])
    with pytest.raises(SystemExit):
        main(["graph", "sample", "--ell", "3", "--flavor", "odd"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nilrado", "local", "hilbert", "--summary"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[0] == "1 1 0"
