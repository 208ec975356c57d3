import json
import math
import subprocess
import sys

import pytest

from qflow import cli

MINIMAL = {"mode": "solve", "n": 3, "sign": 1, "V": "pi^2", "P": "2 0 0 1; 0 2 0 1; 0 0 2 1", "L": 64}


def _cfg(**kw):
    d = dict(MINIMAL)
    d.update(kw)
    return json.dumps({k: v for k, v in d.items() if v is not None})


def test_parse_minimal():
    cfg = cli.parse_config(_cfg())
    assert cfg.V == pytest.approx(math.pi**2) and cfg.L == 64 and cfg.zonal == "auto"


def test_parse_rejects_boundary_volume():
    with pytest.raises(cli.ConfigError, match=r"V: .*\(0,\|S\^n\|\)"):
        cli.parse_config(_cfg(V="2*pi^2"))


def test_parse_negative_any_volume():
    cfg = cli.parse_config(_cfg(sign=-1, V="5*2*pi^2"))
    assert cfg.V == pytest.approx(10 * math.pi**2)


@pytest.mark.parametrize(
    "patch,match",
    [
        ({"bogus": 1}, "bogus: unknown key"),
        ({"L": "many"}, "L"),
        ({"solver": {"tol_g": "x"}}, "solver.tol_g"),
        ({"solver": {"speed": 1}}, "solver.speed: unknown key"),
        ({"mode": "dance"}, "mode: must be one of"),
        ({"sign": None}, "sign: required"),
        ({"P": "2 0 0 1; 0 2 0 -1"}, "P: .*indefinite"),
        ({"n": 4}, "n: must be an odd"),
        ({"u0": "lemma22"}, "u0: only half_w0"),
        ({"V": "__import__('os')"}, "V"),
        ({"pointwise": [[0, 0]]}, "pointwise"),
    ],
)
def test_parse_errors(patch, match):
    d = dict(MINIMAL)
    d.update(patch)
    d = {k: v for k, v in d.items() if v is not None}
    with pytest.raises(cli.ConfigError, match=match):
        cli.parse_config(json.dumps(d))


def test_polynomial_forms(tmp_path):
    rows = cli.parse_config(_cfg(P=[[2, 0, 0, 1], [0, 2, 0, 1], [0, 0, 2, 1]]))
    (tmp_path / "p.txt").write_text("2 0 0 1\n0 2 0 1\n0 0 2 1\n")
    (tmp_path / "c.json").write_text(_cfg(P="p.txt"))
    from_file = cli.load_config(tmp_path / "c.json")
    from qflow.problem import PolynomialR3

    assert PolynomialR3.parse(rows.P) == PolynomialR3.parse(from_file.P) == PolynomialR3.parse(MINIMAL["P"])


def test_suite_config_needs_no_problem():
    cfg = cli.parse_config('{"mode": "beckner-suite", "seed": 7}')
    assert cfg.seed == 7


def test_solve_outputs_and_exit_zero(tmp_path, capsys):
    (tmp_path / "c.json").write_text(_cfg(L=32))
    code = cli.main(["solve", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "a"), "--serial"])
    assert code == 0
    out = capsys.readouterr().out
    assert "ALL GATED CHECKS PASSED" in out
    for name in ("report.json", "timings.json", "coeffs.txt", "profile.csv"):
        assert (tmp_path / "a" / name).exists()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["passed"] and rep["payload"]["volume_rel_err"] < 1e-6
    assert all({"measured", "threshold", "passed"} <= set(c) for c in rep["checks"])


def test_byte_identical_reports(tmp_path):
    (tmp_path / "c.json").write_text(_cfg(L=32))
    for d in ("a", "b"):
        subprocess.run([sys.executable, "-m", "qflow.cli", "solve", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / d), "--serial"], check=True, capture_output=True)
    for name in ("report.json", "coeffs.txt", "profile.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gated_failure_exit_one(tmp_path):
    (tmp_path / "c.json").write_text(_cfg(L=16, solver={"max_iter": 1}))
    assert cli.main(["solve", "--config", str(tmp_path / "c.json")]) == 1


def test_diagnostics_do_not_gate(tmp_path):
    cfg = cli.parse_config(_cfg(L=16))
    report, checks = cli.run(cfg)
    assert any(not c.gated for c in checks)
    assert report.passed == all(c.passed for c in checks if c.gated)


def test_config_error_exit_two(tmp_path, capsys):
    (tmp_path / "c.json").write_text(_cfg(V="2*pi^2"))
    assert cli.main(["solve", "--config", str(tmp_path / "c.json")]) == 2
    assert "config error" in capsys.readouterr().err
    assert cli.main(["solve", "--config", str(tmp_path / "missing.json")]) == 2


def test_runtime_error_exit_three(tmp_path, capsys):
    (tmp_path / "c.json").write_text(_cfg(sign=-1, V=1.0, P="2 0 0 1e-300; 0 2 0 1e-300; 0 0 2 1e-300; 0 0 0 -300", L=4))
    assert cli.main(["solve", "--config", str(tmp_path / "c.json")]) == 3
    assert "[solve] HypothesisViolation" in capsys.readouterr().err


@pytest.mark.parametrize("suite", ["multipliers", "coercivity", "poincare", "transforms", "beckner"])
def test_verify_suites(suite, capsys):
    assert cli.main(["verify", suite, "--seed", "7"]) == 0
    assert "ALL GATED CHECKS PASSED" in capsys.readouterr().out


def test_verify_beckner_default_seed(tmp_path):
    assert cli.main(["verify", "beckner-suite", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["config"]["seed"] == 7
    cases = [c for c in rep["checks"] if c["name"] == "Beckner cases passing"][0]
    assert cases["detail"] == "200/200"
