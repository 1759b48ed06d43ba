import csv
import json

import numpy as np
import pytest

from avrfopid.cli import main, parse_genome, parse_rows
from avrfopid.fracops import get_regime
from avrfopid.moo import nondominated_sort

CASE1_PID = "kp=0.16736,ki=0.64860,kd=0.03387,tf=0.00062"


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def case1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    argv = ["run", "--case", "1", "--regime", "pid", "--pop", "40", "--gens", "60", "--seed", "7"]
    code = main([*argv, "--plant", "calibrated", "--out", str(out)])
    return code, out


def test_run_writes_outputs(case1_run):
    code, out = case1_run
    assert code == 0
    assert {p.name for p in out.iterdir()} >= {"pareto.csv", "compromise.json", "manifest.json"}
    rows = read_csv(out / "pareto.csv")
    assert 0 < len(rows) <= 40
    assert list(rows[0])[:6] == ["kp", "ki", "kd", "tf_filter", "lam", "mu"]
    F = np.array([[float(r["J_d"]), float(r["J_ST"])] for r in rows])
    assert nondominated_sort(F) == [list(range(len(rows)))]
    report = json.loads((out / "compromise.json").read_text())
    assert len(report["memberships"]) == len(rows)
    assert sum(report["satisfaction"]) == pytest.approx(1.0, abs=1e-12)


def test_manifest_rerun_is_byte_identical(case1_run, tmp_path):
    _, out = case1_run
    assert main(["run", "--manifest", str(out / "manifest.json"), "--out", str(tmp_path)]) == 0
    for name in ("pareto.csv", "compromise.json"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_unknown_case(tmp_path, capsys):
    assert main(["run", "--case", "13", "--out", str(tmp_path)]) == 1
    assert "unknown case" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["respond", "--genome", "kp=1,zz=2", "--out", str(tmp_path / "r.csv")]) == 1
    assert main(["table1", "--plant", str(tmp_path / "missing.json"), "--out", str(tmp_path / "t.csv")]) == 1
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 1
    capsys.readouterr()


def test_soo_flag_is_restricted(tmp_path, capsys):
    assert main(["run", "--case", "2", "--soo", "--pop", "4", "--gens", "0", "--out", str(tmp_path)]) == 1
    assert "cases 11 and 12" in capsys.readouterr().err


def test_parse_helpers():
    p = parse_genome("kp=1,ki=2,kd=3,tf=0.1", get_regime("pid"))
    assert (p.lam, p.mu) == (1.0, 1.0)
    with pytest.raises(Exception):
        parse_genome("kp=1,ki=2,kd=3,tf=0.1,lam=1.5,mu=1.0", get_regime("pid"))
    assert parse_rows("1-3,6") == [1, 2, 3, 6]


# -- respond -------------------------------------------------------------------------------


def test_respond_case1(tmp_path):
    out = tmp_path / "resp.csv"
    assert main(["respond", "--genome", CASE1_PID, "--plant", "calibrated", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["omega", "mag_S", "mag_T", "mag_step_dist", "mag_Su", "mag_step_track"]
    w = np.array([float(r["omega"]) for r in rows])
    assert np.all(np.diff(w) > 0) and w[0] == pytest.approx(1e-4) and w[-1] == pytest.approx(1e4)
    assert len(w) == 321
    peak = max(float(r["mag_step_dist"]) for r in rows)
    assert peak == pytest.approx(2.0413, rel=0.02)


def test_respond_without_integral_warns(tmp_path, capsys):
    out = tmp_path / "resp.csv"
    code = main(["respond", "--genome", "kp=0.2,ki=0,kd=0.03,tf=0.001", "--plant", "calibrated", "--out", str(out)])
    assert code == 0 and out.exists()
    assert "J_track is infinite" in capsys.readouterr().err
    track = [float(r["mag_step_track"]) for r in read_csv(out)]
    assert track[0] > 100 * track[len(track) // 2]


def test_respond_infeasible(tmp_path, capsys):
    code = main(["respond", "--genome", "kp=9,ki=9,kd=9,tf=0.1", "--plant", "calibrated", "--out", str(tmp_path / "r.csv")])
    assert code == 2
    assert "closed-loop stability" in capsys.readouterr().err


# -- table1 ---------------------------------------------------------------------------------


def test_table1_shape_and_pass(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["table1", "--rows", "1-2", "--plant", "calibrated", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 12
    case2 = [r for r in rows if r["case"] == "2" and r["structure"] == "fopid4"]
    assert [float(r["tabulated"]) for r in case2] == [0.3085, 0.1024]


def test_table1_tolerance(tmp_path):
    out = tmp_path / "t.csv"
    base = ["table1", "--rows", "1-2", "--plant", "calibrated", "--out", str(out)]
    assert main([*base, "--tol", "1e-9"]) == 3
    assert main([*base, "--tol", "1e9"]) == 0


def test_table1_unrealizable_rows_fail_any_tolerance(tmp_path):
    # several published genomes do not stabilize the benchmark plant
    out = tmp_path / "t.csv"
    assert main(["table1", "--rows", "1-2", "--tol", "1e9", "--out", str(out)]) == 3
    bad = [r for r in read_csv(out) if r["passed"] == "fail"]
    assert bad and all(r["note"] == "closed-loop stability" for r in bad)
