import csv
import io
import json
import subprocess
import sys

import pytest

from randistill import __version__
from randistill.acceptance import lemma_one, mincut_rates, recurrence_equivalence
from randistill.cli import EXIT_IO, EXIT_OK, EXIT_PARAM, EXIT_VERIFY, ResultRecord, main, round_sig
from randistill.config import DEFAULT


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_w_class_example(capsys):
    code, out, _ = run_cli(capsys, "w-class", "--alpha", "0.3", "--beta", "0.4", "--gamma", "auto",
                           "--delta", "0", "--epsilon", "0.02", "--max-rounds", "2000")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert set(rec) == {"command", "params", "seed", "version", "wall_ms", "results", "truncated_mass"}
    res = rec["results"]
    assert res["q_rnd_closed"] == pytest.approx(0.808882, abs=1e-6)
    assert res["q_B"] == pytest.approx(0.733212, abs=1e-6)
    assert rec["version"] == __version__ and rec["seed"] == 0


def test_w_class_example_engine_within_1e3(capsys):
    # stated tolerance; at 2000 rounds the exhausted mass (scored zero) is ~0.0116
    _, out, _ = run_cli(capsys, "w-class", "--alpha", "0.3", "--beta", "0.4", "--gamma", "auto",
                        "--delta", "0", "--epsilon", "0.02", "--max-rounds", "2000")
    res = json.loads(out)["results"]
    print(f"engine gap {res['engine_gap']:.6g}, exhausted mass {res['engine']['exhausted_mass']:.6g}")
    assert abs(res["engine_gap"]) <= 1e-3


def test_w_class_engine_gap_is_exhausted_mass(capsys):
    _, out, _ = run_cli(capsys, "w-class", "--alpha", "0.3", "--beta", "0.4",
                        "--epsilon", "0.02", "--max-rounds", "2000")
    res = json.loads(out)["results"]
    assert res["engine_gap"] == pytest.approx(res["engine"]["exhausted_mass"], abs=2e-4)


def test_ghz_example_boundary(capsys):
    code, out, _ = run_cli(capsys, "ghz-example", "--alpha2", "0.32")
    res = json.loads(out)["results"]
    assert code == EXIT_OK
    assert res["advantage"] is False
    assert res["q_rnd"] == pytest.approx(0.96, abs=1e-12)


@pytest.mark.parametrize("argv", [
    ["ghz-example", "--alpha2", "0.5"],
    ["ghz-example"],
    ["w-class", "--alpha", "0.5", "--beta", "0.4"],
    ["dicke", "--m", "3", "--n", "3", "--m2", "2", "--n2", "1"],
    ["w-protocol", "--epsilon", "1.5"],
    ["sweep", "--target", "ghz-example", "--steps", "2000000"],
    ["verify", "--tol", "nonsense=1"],
    ["verify", "--tol", "oops"],
    ["no-such-command"],
    ["ghz-example", "--alpha2", "0.3", "--seed", "-1"],
])
def test_parameter_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == EXIT_PARAM
    assert err


def test_io_error_exit_4(capsys, tmp_path):
    code, _, err = run_cli(capsys, "ghz-example", "--alpha2", "0.3",
                           "--output", str(tmp_path / "missing" / "out.json"))
    assert code == EXIT_IO and "cannot write" in err


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    assert main(["two-copy", "--output", str(path)]) == EXIT_OK
    rec = json.loads(path.read_text())
    assert rec["results"]["zeta"] == pytest.approx(0.1354693, abs=1e-6)


def test_deterministic_bytes(capsys):
    argv = ["w-protocol", "--state", "random", "--seed", "42", "--epsilon", "0.1",
            "--max-rounds", "300", "--no-wall-time"]
    _, a, _ = run_cli(capsys, *argv)
    _, b, _ = run_cli(capsys, *argv)
    assert a == b
    _, c, _ = run_cli(capsys, *argv[:4], "43", *argv[5:])
    assert c != a


@pytest.mark.parametrize("argv", [
    ["w-protocol", "--epsilon", "0.1", "--max-rounds", "50"],
    ["w-class", "--alpha", "0.3", "--beta", "0.4", "--epsilon", "0.1", "--max-rounds", "50"],
    ["ghz-example", "--alpha2", "0.33"],
    ["dicke", "--m", "5", "--n", "2", "--m2", "3", "--n2", "1"],
    ["two-copy", "--epsilon", "0.1"],
    ["mincut", "--state", "dicke", "--m", "4", "--n", "2"],
])
def test_round_trip(capsys, argv):
    code, out, _ = run_cli(capsys, *argv)
    assert code == EXIT_OK
    rec = ResultRecord.from_json(out)
    assert rec.to_json() == out
    assert json.loads(rec.to_json()) == json.loads(out)


def test_round_sig_twelve_digits():
    assert round_sig(1 / 3) == 0.333333333333
    assert round_sig({"x": [2 / 3, True, None, 5]}) == {"x": [0.666666666667, True, None, 5]}


def read_csv(text):
    assert "\r" not in text
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_ghz(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--target", "ghz-example", "--lo", "0.25",
                           "--hi", str(1 / 3), "--steps", "100")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "alpha2,q_rnd,q_threshold,advantage"
    rows = read_csv(out)
    assert len(rows) == 100
    flips = [r["alpha2"] for r in rows if r["advantage"] == "true"]
    assert min(float(a) for a in flips) > 8 / 25


def test_sweep_w_protocol_monotone(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--target", "w-protocol", "--values", "0.2", "0.1", "0.05", "0.02")
    q = [float(r["total_expected_q"]) for r in read_csv(out)]
    assert q == sorted(q) and len(q) == 4


def test_sweep_finite_round(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--target", "finite-round", "--lo", "1", "--hi", "12", "--steps", "12")
    rows = read_csv(out)
    assert [int(r["R"]) for r in rows] == list(range(1, 13))
    for r in rows:
        assert float(r["success"]) == pytest.approx(int(r["R"]) / (int(r["R"]) + 1), abs=1e-9)


def test_env_tolerance_file(capsys, tmp_path, monkeypatch):
    bad = tmp_path / "tol.json"
    bad.write_text(json.dumps({"not_a_key": 1}))
    monkeypatch.setenv("RANDISTILL_TOLERANCES", str(bad))
    code, _, _ = run_cli(capsys, "ghz-example", "--alpha2", "0.3")
    assert code == EXIT_PARAM


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "randistill", "ghz-example", "--alpha2", "0.33"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["advantage"] is True


def test_seed_does_not_change_outcomes():
    for check in (recurrence_equivalence, lemma_one, mincut_rates):
        assert check(DEFAULT, 1).passed == check(DEFAULT, 2).passed


@pytest.mark.slow
def test_verify_zero_tolerance_exit_3(capsys):
    code, out, _ = run_cli(capsys, "verify", "--tol", "all=0", "--no-wall-time")
    assert code == EXIT_VERIFY
    res = json.loads(out)["results"]
    assert sum(not v["pass"] for k, v in res.items() if k != "all_pass") >= 9


@pytest.mark.slow
def test_verify_exit_0(capsys):
    code, out, err = run_cli(capsys, "verify")
    print(err)
    assert code == EXIT_OK
