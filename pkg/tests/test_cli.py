import csv
import json

import pytest

from gaudinlab import cli


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def problem(tmp_path, weights=(1, 1), points=((0, 0), (1, 0)), algebra="sl2", name="p.json"):
    sites = [{"z": list(z), "weight": w} for z, w in zip(points, weights)]
    return write(tmp_path / name, {"algebra": algebra, "sites": sites})


def run_json(capsys, argv):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip().startswith("{") else out.out), out.err


def strip_timing(report):
    report = dict(report)
    report.pop("timing")
    return report


def test_solve_writes_one_root(tmp_path, capsys):
    p = problem(tmp_path)
    out = tmp_path / "out"
    code, rep, _ = run_json(capsys, ["bethe", "solve", "--problem", p, "--m", "1", "--out", str(out)])
    assert code == 0
    assert rep["status"] == "ok"
    (cfg,) = rep["result"]["configurations"]
    assert cfg["roots"][0] == pytest.approx([0.5, 0.0], abs=1e-12)
    with open(out / "roots_000.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "re", "im", "residual"]
    assert len(rows) == 2
    assert json.loads((out / "report.json").read_text()) == rep


def test_report_roundtrip_into_verify(tmp_path, capsys):
    p = problem(tmp_path, (1, 1, 1), ((0, 0), (1, 0), (0.4, 1.3)))
    code, rep, _ = run_json(capsys, ["bethe", "solve", "--problem", p, "--m", "1"])
    roots = write(tmp_path / "solve.json", rep)
    code, ver, _ = run_json(capsys, ["bethe", "verify", "--problem", p, "--roots", roots])
    assert code == 0
    assert len(ver["result"]["verifications"]) == 2
    for v in ver["result"]["verifications"]:
        assert v["eigen_residual"] < 1e-10


def test_verify_perturbed_root_fails(tmp_path, capsys):
    p = problem(tmp_path)
    roots = write(tmp_path / "r.json", {"roots": [[0.501, 0.0]]})
    code, rep, err = run_json(capsys, ["bethe", "verify", "--problem", p, "--roots", roots])
    assert code == 1
    assert rep["status"] == "verification_failed"
    assert "verification failed" in err


def test_pm_prints_polynomial(capsys):
    assert cli.run(["oper", "pm", "--m", "0", "--text"]) == 0
    assert capsys.readouterr().out.strip() == "q_{-1}"
    code, rep, _ = run_json(capsys, ["oper", "pm", "--m", "2"])
    assert code == 0
    assert rep["result"]["weighted_degrees"] == [3]
    assert rep["result"]["polynomial"].startswith("1/4*q_{-1}^3")


def test_audit_deterministic(tmp_path, capsys):
    p = problem(tmp_path, (1, 1, 1), ((0, 0), (1, 0), (0.4, 1.3)))
    code1, a, _ = run_json(capsys, ["bethe", "audit", "--problem", p, "--seed", "5"])
    code2, b, _ = run_json(capsys, ["bethe", "audit", "--problem", p, "--seed", "5"])
    assert code1 == code2 == 0
    assert a["result"]["complete"]
    assert json.dumps(strip_timing(a), sort_keys=True) == json.dumps(strip_timing(b), sort_keys=True)


def test_monodromy_sov_spectrum(tmp_path, capsys):
    p = problem(tmp_path)
    roots = write(tmp_path / "r.json", {"roots": [[0.5, 0.0]]})
    code, rep, _ = run_json(capsys, ["monodromy", "--problem", p, "--roots", roots])
    assert code == 0 and rep["result"]["reports"][0]["trivial"] == [True, True]
    code, rep, _ = run_json(capsys, ["sov", "check", "--problem", p, "--roots", roots])
    assert code == 0 and rep["result"]["checks"][0]["separated_passed"]
    out = tmp_path / "spec"
    code, rep, _ = run_json(capsys, ["gaudin", "spectrum", "--problem", p, "--sector", "0",
                                     "--out", str(out)])
    assert code == 0
    assert rep["result"]["eigenvalues"] == [[[1.5, 0.0], [-1.5, 0.0]]]
    assert (out / "eigenvalues_000.csv").exists()


def test_sl3_check(tmp_path, capsys):
    p = problem(tmp_path, ([1, 0], [1, 0]), algebra="sl3")
    code, rep, _ = run_json(capsys, ["bethe", "solve", "--problem", p, "--m", "1,0"])
    assert code == 0
    roots = write(tmp_path / "r.json", rep)
    code, rep, _ = run_json(capsys, ["sl3", "check", "--problem", p, "--roots", roots])
    assert code == 0 and rep["result"]["checks"][0]["factorizes"]


def test_riccati_and_tq(tmp_path, capsys):
    q = write(tmp_path / "q.json", {"q": [0, 0, 0, 0, 0]})
    code, rep, _ = run_json(capsys, ["oper", "riccati", "--q", q, "--depth", "4"])
    assert code == 0 and len(rep["result"]["branches"]) == 2
    code, rep, _ = run_json(capsys, ["tq", "--lambda-num", "1,-0.3", "--lambda-den", "1,1.7",
                                     "--q", "0.7,0", "--lattice", "32"])
    assert code == 0 and rep["result"]["residual"] < 1e-12


@pytest.mark.parametrize("argv_tail", [
    ["bethe", "solve", "--m", "1"],
    ["bethe", "solve", "--m", "x"],
])
def test_invalid_inputs_exit_2(tmp_path, capsys, argv_tail):
    p = problem(tmp_path, points=((0, 0), (0, 0)))
    if "--m" in argv_tail and argv_tail[-1] == "x":
        p = problem(tmp_path, name="ok.json")
    code = cli.run(argv_tail[:2] + ["--problem", p] + argv_tail[2:])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_malformed_file_and_unknown_command(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"algebra": "sl2",\n "sites": [ }')
    assert cli.run(["bethe", "solve", "--problem", str(bad), "--m", "1"]) == 2
    assert "line" in capsys.readouterr().err
    assert cli.run(["bethe", "solve", "--problem", str(tmp_path / "missing.json"), "--m", "1"]) == 2
    assert cli.run(["frobnicate"]) == 2
