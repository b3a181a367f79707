import json
import os
import subprocess
import sys

import pytest
from click.testing import CliRunner

from semitrace.cli import main


@pytest.fixture
def run():
    runner = CliRunner()
    return lambda *args, **kw: runner.invoke(main, [str(a) for a in args], **kw)


def test_verify_pass_writes_report(run, tmp_path):
    out = tmp_path / "r.json"
    res = run("verify", "--space", "disk", "--t", 0, "--f", "z", "--g", "zbar", "--json-out", out)
    assert res.exit_code == 0, res.output
    rep = json.loads(out.read_text())
    assert rep["pass"] and abs(rep["lhs"][0] + 1) < 1e-9


def test_verify_numerical_failure_exits_one(run, tmp_path):
    out = tmp_path / "r.json"
    res = run("verify", "--f", "z", "--g", "zbar", "--tol", "1e-300", "--json-out", out)
    assert res.exit_code == 1
    assert out.exists() and json.loads(out.read_text())["pass"] is False


@pytest.mark.parametrize("args", [
    ["verify", "--f", "z**", "--g", "z"],
    ["verify", "--f", "z"],
    ["verify", "--t", "-1", "--f", "z", "--g", "zbar"],
    ["verify", "--space", "disk", "--n", "2", "--f", "z", "--g", "zbar"],
    ["scan", "--t-list", "2,1", "--no-lhs"],
    ["scan", "--t-list", "a,b"],
    ["lemma", "no-such-check"],
    ["hankel", "--g", "bump:r0=0.5"],
])
def test_bad_input_exits_two(run, args):
    assert run(*args).exit_code == 2


def test_config_file_and_flag_override(run, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"f": "z", "g": "zbar", "t": 5.0}))
    out = tmp_path / "r.json"
    res = run("verify", "--config", cfg, "--t", 0.5, "--json-out", out)
    assert res.exit_code == 0, res.output
    assert json.loads(out.read_text())["params"]["t"] == 0.5
    cfg.write_text(json.dumps({"f": "z", "g": "zbar", "colour": "red"}))
    assert run("verify", "--config", cfg).exit_code == 2
    cfg.write_text("[1, 2]")
    assert run("verify", "--config", cfg).exit_code == 2


def test_scan_csv_is_reproducible(run, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        res = run("scan", "--t-list", "1,2", "--no-lhs", "--csv-out", path)
        assert res.exit_code == 0, res.output
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "t,lhs_re,lhs_im,term1_re,term1_im,term2_abs,slope_running"
    first = lines[1].split(",")
    # no operator side requested and no slope from a single point
    assert first[1] == "" and first[6] == ""
    assert float(first[3]) == pytest.approx(-0.5, abs=1e-12)
    assert lines[2].split(",")[6] != ""


def test_hankel_and_specfun(run):
    res = run("hankel", "--g", "zbar", "--t", 1.0)
    assert res.exit_code == 0
    assert float(res.output.split()[2]) == pytest.approx(1.0, abs=1e-8)
    res = run("specfun", "dump", "--what", "rho", "--t", 1.0, "--points", 5)
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert len(lines) == 6 and all(len(l.split(",")) == len(lines[0].split(",")) for l in lines)


def test_lemma_commands(run, tmp_path):
    res = run("lemma", "list")
    assert res.exit_code == 0 and "fubini" in res.output.split()
    out = tmp_path / "l.json"
    res = run("lemma", "sphere-formula", "--json-out", out)
    assert res.exit_code == 0, res.output
    assert all(r["pass"] for r in json.loads(out.read_text()))


def _cli(*args, env=None):
    return subprocess.run([sys.executable, "-m", "semitrace.cli", *args], capture_output=True,
                          text=True, env=dict(os.environ, **(env or {})))


def test_selftest_detects_injected_fault():
    # the fault corrupts a process-wide table, so it runs in a child process
    bad = _cli("selftest", "--only", "rho-consistency", "--inject-fault", "rho-cache")
    assert bad.returncode == 1 and "failed: rho-consistency" in bad.stdout
    good = _cli("selftest", "--only", "rho-consistency")
    assert good.returncode == 0 and "1/1 passed" in good.stdout


def test_thread_env_validation():
    assert _cli("lemma", "list", env={"SEMITRACE_THREADS": "two"}).returncode == 2
    assert _cli("lemma", "list", env={"SEMITRACE_THREADS": "1"}).returncode == 0


def test_ball_scan_without_operator_side(run):
    assert run("scan", "--n", 2, "--t-list", "1,2").exit_code == 2
    res = run("scan", "--n", 2, "--t-list", "1,2", "--no-lhs", "--samples", 4096)
    assert res.exit_code == 0, res.output
    lines = res.output.strip().splitlines()
    assert lines[0].endswith("scaled_lhs_re,wedge_limit_re") and len(lines) == 3
    # the wedge-constant column does not depend on t
    assert float(lines[1].split(",")[-1]) == pytest.approx(float(lines[2].split(",")[-1]),
                                                           rel=1e-10)
