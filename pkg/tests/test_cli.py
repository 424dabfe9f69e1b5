import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from crcep.cli import UsageError, dumps, main, parse_and_validate

from conftest import A_SS, C_OBS, example_lags


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def files(tmp_path):
    C = example_lags()
    return {
        "white": write(tmp_path / "white.json", {"m": 1, "n": 1, "lags": [1.0, 0.0]}),
        "b1": write(tmp_path / "b1.json", {"coeffs": [1.0, 0.0]}),
        "b_half": write(tmp_path / "bh.json", {"coeffs": [1.0, 0.5]}),
        "vec": write(tmp_path / "vec.json", {"m": 2, "n": 1, "lags": C.tolist()}),
        "state": write(tmp_path / "ss.json", {"A": A_SS.tolist(), "C": C_OBS.tolist(),
                                              "W": np.eye(2).tolist(), "R": np.eye(2).tolist()}),
        "long": write(tmp_path / "long.json", {"m": 1, "n": 5,
                                               "lags": [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03]}),
        "dir": tmp_path,
    }


def run_cli(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(list(argv) + ["-o", str(out)])
    return code, json.loads(out.read_text())


def test_parse_happy_path(files):
    job = parse_and_validate(["extend-periodic", "--cov", files["white"], "--b", files["b1"],
                              "--N", "32", "-o", "out.json"])
    assert job.command == "extend-periodic" and job.N == 32
    assert job.config.delta == 1e-10


def test_missing_N_names_flag(files):
    with pytest.raises(UsageError, match="--N"):
        parse_and_validate(["extend-periodic", "--cov", files["white"]])


def test_usage_errors(files, capsys):
    assert main(["extend-periodic", "--cov", files["white"]]) == 1
    assert main(["bogus"]) == 1
    assert main(["extend-periodic", "--cov", "nope.json", "--N", "4"]) == 1
    assert main(["extend-periodic", "--cov", files["white"], "--N", "4", "--frobnicate"]) == 1
    capsys.readouterr()


def test_n_less_than_N(files):
    code, doc = run_cli(["extend-periodic", "--cov", files["long"], "--N", "4"], files["dir"])
    assert code == 2 and "n < N required" in doc["error"]["message"]


def test_white_periodic(files):
    code, doc = run_cli(["extend-periodic", "--cov", files["white"], "--b", files["b1"],
                         "--N", "8"], files["dir"])
    assert code == 0
    assert doc["model"]["a"] == [1.0, 0.0] and doc["model"]["sigma2"] == 1.0
    assert doc["report"]["status"] == "converged"


def test_extend_line(files):
    code, doc = run_cli(["extend-line", "--cov", files["white"]], files["dir"])
    assert code == 0 and doc["model"]["a"] == [1.0, 0.0]


def test_extend_vector_example(files):
    code, doc = run_cli(["extend-vector", "--cov", files["vec"], "--b", files["b_half"],
                         "--N", "25"], files["dir"])
    assert code == 0
    A1 = np.array(doc["model"]["A"][1])
    assert np.abs(A1 - [[-0.8609, 0.2989], [-0.2989, -0.8609]]).max() < 1e-3
    assert np.abs(np.array(doc["model"]["D"]) - 0.8122 * np.eye(2)).max() < 1e-3


def test_not_pd_is_data_error(files):
    bad = write(files["dir"] / "bad.json", {"m": 1, "n": 1, "lags": [1.0, 1.0]})
    code, doc = run_cli(["extend-periodic", "--cov", bad, "--N", "8"], files["dir"])
    assert code == 2 and doc["error"]["type"] == "NotPositiveDefiniteError"


def test_malformed_document(files):
    bad = files["dir"] / "junk.json"
    bad.write_text("{not json")
    code, doc = run_cli(["extend-periodic", "--cov", str(bad), "--N", "8"], files["dir"])
    assert code == 2


def test_non_convergence_exit(files):
    c = write(files["dir"] / "c.json", {"m": 1, "n": 2, "lags": [1.0, 0.9, 0.7]})
    b = write(files["dir"] / "b.json", {"coeffs": [1.0, 0.5, 0.2]})
    code, doc = run_cli(["extend-periodic", "--cov", c, "--b", b, "--N", "16",
                         "--max-iter", "1"], files["dir"])
    assert code == 4 and doc["report"]["status"] == "max-iter"


def test_smooth_csv_and_determinism(files):
    argv = ["smooth", "--state", files["state"], "--b", files["b_half"], "--N", "25",
            "--seed", "3", "--csv", str(files["dir"] / "traj.csv")]
    code, doc = run_cli(argv, files["dir"], "a.json")
    assert code == 0 and doc["seed"] == 3
    assert doc["residuals"]["oracle_relative"] < 1e-8
    first = (files["dir"] / "a.json").read_bytes()
    csv_first = (files["dir"] / "traj.csv").read_bytes()
    run_cli(argv, files["dir"], "a.json")
    assert (files["dir"] / "a.json").read_bytes() == first
    assert (files["dir"] / "traj.csv").read_bytes() == csv_first
    assert b"\r\n" in csv_first
    rows = list(csv.reader(csv_first.decode().splitlines()))
    assert rows[0] == ["t", "y1", "y2", "x1", "xhat1", "x2", "xhat2"]
    assert len(rows) == 51 and rows[1][0] == "-24" and rows[-1][0] == "25"


def test_smooth_with_observations(files):
    obs = files["dir"] / "y.csv"
    obs.write_text("y1,y2\n" + "\n".join("0.5,-0.25" for _ in range(16)) + "\n")
    code, doc = run_cli(["smooth", "--state", files["state"], "--b", files["b_half"], "--N", "8",
                         "--obs", str(obs)], files["dir"])
    assert code == 0 and "mse" not in doc


def test_simulate_round_trip(files):
    code, fit = run_cli(["extend-vector", "--cov", files["vec"], "--b", files["b_half"],
                         "--N", "25"], files["dir"], "fit.json")
    lags = files["dir"] / "lags.json"
    code, doc = run_cli(["simulate", "--model", str(files["dir"] / "fit.json"), "--N", "4096",
                         "--seed", "11", "--lags-out", str(lags)], files["dir"], "sim.json")
    assert code == 0 and doc["length"] == 8192
    code, refit = run_cli(["extend-vector", "--cov", str(lags), "--b", files["b_half"],
                           "--N", "25"], files["dir"], "refit.json")
    assert code == 0
    A_fit, A_refit = np.array(fit["model"]["A"]), np.array(refit["model"]["A"])
    assert np.abs(A_fit - A_refit).max() < 5e-2


def test_dumps_format():
    text = dumps({"b": 0.1, "a": [1, float("nan")]})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "null" in text


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "crcep", "extend-periodic", "--cov",
                           files["white"], "--N", "4"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "ok"
