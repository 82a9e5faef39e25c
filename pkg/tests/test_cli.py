import json
import math

import numpy as np
import pytest

from tmlog import cli
from tmlog.function_space import SampledFunction, make_interval_grid, write_csv


def run_json(tmp_path, argv, name="r.json"):
    out = tmp_path / name
    code = cli.run(argv + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_verify_constants(tmp_path):
    code, rep = run_json(tmp_path, ["verify-constants"])
    assert code == 0
    assert rep["schema_version"] == 1
    r = rep["results"]
    assert r["C_1_half"] == pytest.approx(0.3183098, abs=1e-7)
    assert r["A_claimed"] == pytest.approx(2.4674011, abs=1e-7)
    assert r["A"] == pytest.approx(math.pi ** 2 / 2, abs=1e-9)
    # the mismatch with the claimed value is a finding, not a failure
    assert rep["failures"] == [] and rep["findings"]


def test_functional_zero(tmp_path):
    g = make_interval_grid(17, 1.0)
    write_csv(SampledFunction(g, np.zeros(17)), tmp_path / "zero.csv")
    code, rep = run_json(tmp_path, ["functional", "--input", str(tmp_path / "zero.csv"), "--growth", "power:2"])
    assert code == 0
    assert rep["results"]["phi"] == 0.0


def test_identity_check_plateau(tmp_path):
    code, rep = run_json(tmp_path, ["identity-check", "--plateau"])
    assert code == 0
    recs = rep["results"]["records"]
    assert recs and rep["findings"]
    bil = recs[-1]
    assert bil["direct_value"] == pytest.approx(6 - 4 * math.log(2), abs=1e-4)
    assert bil["formula_value"] == pytest.approx(0.5, abs=1e-6)


def test_unknown_flag_is_usage_error(capsys):
    assert cli.run(["maximize", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert cli.run(["frobnicate"]) == 2


def test_missing_input_file(tmp_path, capsys):
    assert cli.run(["functional", "--input", str(tmp_path / "nope.csv")]) == 2
    assert "not found" in capsys.readouterr().err


def test_malformed_csv_names_line(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("x,value\n-1,0\n0,zz\n1,0\n")
    assert cli.run(["functional", "--input", str(p)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_missing_header_names_line_one(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("-1,0\n0,1\n1,0\n")
    assert cli.run(["functional", "--input", str(p)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_bad_output_directory(tmp_path):
    assert cli.run(["verify-constants", "--out", str(tmp_path / "no" / "r.json")]) == 2


def test_maximize_writes_function_and_is_deterministic(tmp_path):
    argv = ["maximize", "--grid", "65", "--seed", "3"]
    c1, r1 = run_json(tmp_path, argv, "a.json")
    c2, r2 = run_json(tmp_path, argv, "b.json")
    assert c1 == c2 == 0
    for r in (r1, r2):
        r["results"].pop("seconds")
        r["results"].pop("function_csv")
        r["config"].pop("out")
    assert r1 == r2
    assert (tmp_path / "a_u.csv").exists()


def test_failed_checks_exit_one(tmp_path):
    code, rep = run_json(tmp_path, ["maximize", "--grid", "65", "--max-iter", "1"])
    assert code == 1
    assert any(f["check"] == "converged" for f in rep["failures"])


def test_el_check_from_csv(tmp_path):
    code, _ = run_json(tmp_path, ["maximize", "--grid", "129"], "m.json")
    assert code == 0
    code, rep = run_json(tmp_path, ["el-check", "--input", str(tmp_path / "m_u.csv")], "e.json")
    assert code == 0
    assert rep["results"]["residual_w"] <= 0.05


def test_moving_plane_report(tmp_path):
    code, rep = run_json(tmp_path, ["moving-plane", "--grid", "401", "--lambda-steps", "6"])
    assert code == 0
    r = rep["results"]
    assert len(r["c_lambda"]) == 6
    assert abs(r["lambda1_estimate"]) <= 0.2


def test_moser_report(tmp_path):
    code, rep = run_json(tmp_path, ["moser", "--n", "100,1000", "--gamma", "0.5"])
    assert code == 0
    ws = rep["results"]["witnesses"]
    assert [w["n"] for w in ws] == [100, 1000]
    assert ws[0]["phi_direct"] < ws[1]["phi_direct"]


def test_moser_rejects_small_n(tmp_path):
    assert cli.run(["moser", "--n", "2"]) == 2


def test_all_aggregates_failures(tmp_path, monkeypatch):
    def broken(cfg):
        s = cli.Suite("identity-check")
        s.check("forced", False)
        return s

    monkeypatch.setitem(cli.SUITES, "identity-check", broken)
    monkeypatch.setitem(cli.SUITES, "moser", lambda cfg: cli.Suite("moser"))
    monkeypatch.setitem(cli.SUITES, "maximize", lambda cfg: cli.Suite("maximize"))
    monkeypatch.setitem(cli.SUITES, "el-check", lambda cfg: cli.Suite("el-check"))
    monkeypatch.setitem(cli.SUITES, "moving-plane", lambda cfg: cli.Suite("moving-plane"))
    code, rep = run_json(tmp_path, ["all"])
    assert code == 1
    assert [f["check"] for f in rep["failures"]] == ["forced"]
    assert len(rep["suites"]) == 6


def test_stdout_report(capsys):
    assert cli.run(["verify-constants"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["schema_version"] == 1
