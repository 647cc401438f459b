import csv
import io
import json
import subprocess
import sys

import pytest

from steerkit import cli, serialization


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def make(tmp_path, capsys, name, *argv):
    path = str(tmp_path / name)
    code, _, _ = run(capsys, "make", *argv, "--out", path)
    assert code == 0
    return path


@pytest.fixture
def singlet_file(tmp_path, capsys):
    return make(tmp_path, capsys, "singlet.json", "werner", "--d", "2", "--eta", "1")


def test_detect_from_state(capsys, singlet_file):
    code, out, _ = run(capsys, "detect", "--state", singlet_file, "--measurements", "paulis:xz")
    assert code == 0
    res = json.loads(out)
    assert res["steerable"] and res["status"] == "steerable"
    assert res["inequality_value"] == pytest.approx(res["mu"], abs=1e-6)
    assert res["inequality"]["kind"] == "inequality"
    assert res["solver_status"] == "optimal" and res["seed"] == 0 and res["tol"] == 1e-7


def test_detect_from_assemblage_and_unsteerable_model(tmp_path, capsys):
    state = make(tmp_path, capsys, "w.json", "werner", "--eta", "0.3")
    asm = make(tmp_path, capsys, "asm.json", "assemblage", "--state", state, "--measurements", "paulis:xyz")
    code, out, _ = run(capsys, "detect", "--assemblage", asm)
    res = json.loads(out)
    assert code == 0 and not res["steerable"] and res["model_residual"] < 1e-7


def test_quantify_and_inequality(capsys, singlet_file):
    code, out, _ = run(capsys, "quantify", "--state", singlet_file, "--measurements", "paulis:xz", "--measure", "robustness")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.171573, abs=1e-5)
    code, out, _ = run(capsys, "inequality", "--state", singlet_file, "--measurements", "paulis:xz")
    res = json.loads(out)
    assert code == 0 and res["violated"] and res["certificate_min_eigenvalue"] > -1e-8


def test_jm_with_robustness(capsys):
    code, out, _ = run(capsys, "jm", "--measurements", "paulis:xz", "--robustness")
    res = json.loads(out)
    assert code == 0 and not res["jointly_measurable"]
    assert res["white_noise_threshold"] == pytest.approx(2**-0.5, abs=1e-7)


def test_radius_reports_tstate_closed_form(capsys, singlet_file):
    code, out, _ = run(capsys, "radius", "--state", singlet_file, "--dirs", "icosa6")
    res = json.loads(out)
    assert code == 0
    assert res["lower"] <= 0.5 <= res["upper"]
    assert res["tstate_radius"] == pytest.approx(0.5, abs=1e-9)
    assert res["verdict"] == "steerable"


def test_criteria_state_and_covariance(tmp_path, capsys, singlet_file):
    code, out, _ = run(capsys, "criteria", "--state", singlet_file)
    assert code == 0 and all(c["violated"] for c in json.loads(out)["criteria"])
    cov = make(tmp_path, capsys, "tmsv.json", "tmsv", "--r", "0.5")
    code, out, _ = run(capsys, "criteria", "--covariance", cov)
    assert code == 0 and all(v["steerable"] for v in json.loads(out)["gaussian"])


def test_thresholds(capsys):
    code, out, _ = run(capsys, "thresholds", "--family", "isotropic", "--class", "projective", "--d", "3")
    assert code == 0 and json.loads(out)["threshold"] == pytest.approx(5 / 12)


def test_make_output_round_trips_byte_identically(tmp_path, capsys):
    first = make(tmp_path, capsys, "a.json", "isotropic", "--d", "3", "--eta", "0.4")
    assert cli.run(["make", "assemblage", "--state", first, "--measurements", "paulis:xz"]) == 2
    capsys.readouterr()
    rho, dims = serialization.read(first)
    second = tmp_path / "b.json"
    serialization.write(rho, str(second), dims)
    assert (tmp_path / "a.json").read_bytes() == second.read_bytes()


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "werner", "--start", "0.5", "--stop", "0.65", "--step", "0.05", "--columns", "sdp,ccnr,lur")
    assert code == 0
    assert "\r" not in out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["eta"] for r in rows] == ["0.5", "0.55", "0.6", "0.65"]
    assert [r["sdp_verdict"] for r in rows] == ["unsteerable", "unsteerable", "steerable", "steerable"]
    assert rows[-1]["ccnr_violated"] == "true" and rows[0]["ccnr_violated"] == "false"
    assert {"tol", "solver_status"} <= set(rows[0])


def test_empty_sweep_writes_header_only(capsys):
    code, out, _ = run(capsys, "sweep", "werner", "--start", "0.8", "--stop", "0.2")
    assert code == 0
    assert out.splitlines() == ["eta,three_pauli,three_pauli_violated,sdp_verdict,sdp_mu,ccnr,ccnr_violated,tol,solver_status"]


def test_one_way_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "one-way", "--alpha", "0.6", "0.6", "0.1", "--theta-deg", "10", "10", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert rows[0]["a_to_b"] == "steerable"
    assert rows[0]["label"] == "A->B-detected+B->A-model-exists"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["detect"],
        ["nonsense"],
        ["detect", "--state", "x.json", "--measurements", "paulis:q"],
        ["detect", "--state", "x.json", "--measurements", "axes:cube"],
        ["sweep", "werner", "--columns", "bogus"],
        ["sweep", "werner", "--step", "0"],
        ["thresholds", "--family", "werner", "--class", "projective"],
    ],
)
def test_usage_errors_exit_1(tmp_path, capsys, argv, singlet_file):
    argv = [singlet_file if a == "x.json" else a for a in argv]
    code, _, _ = run(capsys, *argv)
    assert code == 1


def test_invalid_data_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1, "kind": "state", "dims": [2, 2], "matrix": [[[2, 0]]]}')
    assert run(capsys, "detect", "--state", str(bad), "--measurements", "paulis:xz")[0] == 2
    assert run(capsys, "radius", "--state", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "thresholds", "--family", "werner", "--class", "projective", "--d", "1")[0] == 2
    assert run(capsys, "make", "werner", "--eta", "1.5")[0] == 2


def test_solver_failure_exits_3(monkeypatch, capsys, singlet_file):
    monkeypatch.setenv("STEERKIT_SOLVER", "BOGUS")
    code, _, err = run(capsys, "detect", "--state", singlet_file, "--measurements", "paulis:xz")
    assert code == 3 and "solver failure" in err


def test_module_entry_point(singlet_file):
    proc = subprocess.run(
        [sys.executable, "-m", "steerkit.cli", "thresholds", "--family", "werner", "--class", "dichotomic", "--d", "3"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["threshold"] == pytest.approx(0.7340137, abs=1e-7)
