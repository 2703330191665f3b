import json
import subprocess
import sys

import pytest

from s3paneitz.cli import SCHEMA_VERSION, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spectrum_csv_rows(capsys):
    code, out, _ = run(capsys, "spectrum", "--L", "8", "--eps", "0.1", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "l [1],lambda_l [1],mu_l(eps=0.1) [1]"
    assert lines[2].startswith("0,-0.9375,")
    assert lines[3].startswith("1,6.5625,")
    assert len(lines) == 2 + 9


def test_spectrum_without_eps_omits_multipliers(capsys):
    code, out, _ = run(capsys, "spectrum", "--L", "2", "--format", "csv")
    assert code == 0
    assert out.splitlines()[1] == "l [1],lambda_l [1]"


def test_json_report_is_self_describing(capsys):
    code, out, _ = run(capsys, "spectrum", "--L", "3")
    doc = json.loads(out)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["defaults"] == {"L": 64, "grid": 256, "res": 8, "eps": [0.1], "seed": 0}
    assert doc["config"]["seed"] == 0
    assert "timestamp" in doc


def test_reports_are_reproducible(capsys):
    argv = ("sweep", "--samples", "20", "--eps", "0", "--seed", "4", "--no-timestamp")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_minimize_constant_start(capsys):
    code, out, _ = run(capsys, "minimize", "--eps", "0.1", "--start", "constant", "--no-timestamp")
    assert code == 0
    run0 = json.loads(out)["results"]["runs"][0]
    assert run0["iterations"] <= 2 and run0["converged"]


def test_minimize_random_start(capsys):
    code, out, _ = run(capsys, "minimize", "--eps", "0.1", "--seed", "3")
    assert code == 0
    assert json.loads(out)["results"]["runs"][0]["s_relative_error"] <= 1e-6


def test_minimize_reports_non_convergence(capsys):
    code, _, _ = run(capsys, "minimize", "--eps", "0.05", "--max-iter", "3")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ("minimize", "--eps", "0.95"),
    ("minimize", "--eps", "0"),
    ("spectrum", "--L", "abc"),
    ("spectrum", "--L", "-1"),
    ("verify", "--res", "30"),
    ("kw", "--rho", "wobbly"),
    ("convolve", "--kernel", "/nonexistent.csv"),
    ("bogus",),
    (),
])
def test_invalid_configuration_exits_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_minimize_near_upper_eps_runs(capsys):
    assert run(capsys, "minimize", "--eps", "0.9")[0] == 0


def test_kw_constants(capsys):
    code, out, _ = run(capsys, "kw", "--rho", "constant", "--chi", "constant")
    assert code == 0
    assert max(abs(r) for r in json.loads(out)["results"]["residuals"]) <= 1e-14
    _, out, _ = run(capsys, "kw", "--chi", "linear")
    assert json.loads(out)["results"]["max_abs"] >= 0.1


def test_probe_table(capsys):
    code, out, _ = run(capsys, "probe", "--eps", "0.1", "--seeds", "3", "--format", "csv")
    assert code == 0
    rows = out.splitlines()[2:]
    assert len(rows) == 3 and all(",constant," in r for r in rows)


def test_sweep_at_zero(capsys):
    code, out, _ = run(capsys, "sweep", "--samples", "40", "--eps", "0")
    s = json.loads(out)["results"]["sweeps"][0]
    assert code == 0 and s["violations"] == 0 and s["argmin_label"] == "constant"


def test_convolve_green_square(capsys):
    code, out, _ = run(capsys, "convolve", "--kernel", "green", "--power", "2")
    assert code == 0
    assert json.loads(out)["results"]["green_square_error_at_1"] <= 1e-8


def test_convolve_reads_table(tmp_path, capsys):
    path = tmp_path / "k.csv"
    code, out, _ = run(capsys, "convolve", "--power", "1", "--format", "csv")
    path.write_text(out.split("\n", 1)[1])
    code, out, _ = run(capsys, "convolve", "--kernel", str(path), "--power", "2")
    assert code == 0


def test_rearrange_random_profile(capsys):
    code, out, _ = run(capsys, "rearrange", "--seed", "2")
    res = json.loads(out)["results"]
    assert code == 0 and res["idempotent"] and res["monotone"]


def test_verify_selected_suites(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "kernel", "--eps", "0.2")
    assert code == 0
    suite = json.loads(out)["results"]["suites"][0]
    assert suite["metrics"]["0.2"]["strictly_decreasing"]
    code, out, _ = run(capsys, "verify", "--suite", "riesz", "--samples", "10", "--res", "8", "--seed", "7")
    assert code == 0
    assert json.loads(out)["results"]["suites"][0]["metrics"]["min_gap"] >= -1e-6


def test_out_file(tmp_path, capsys):
    dest = tmp_path / "report.json"
    code, out, _ = run(capsys, "spectrum", "--L", "2", "--out", str(dest))
    assert code == 0 and "pass" in out
    assert json.loads(dest.read_text())["command"] == "spectrum"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "s3paneitz", "spectrum", "--L", "1",
                           "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "-0.9375" in proc.stdout
