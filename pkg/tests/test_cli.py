import csv
import io
import json
import math
import os
import stat

import numpy as np
import pytest

from qpkid import bounds
from qpkid.cli import SWEEP_COLUMNS, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def strip_clock(rep):
    rep = dict(rep)
    rep.pop("wall_clock_s", None)
    return rep


class TestKeygen:
    def test_range_and_budget(self, capsys):
        code, out, err = run(capsys, "keygen", "--r", 2, "--s", 16, "--seed", 7)
        assert code == 0
        key = json.loads(out)
        assert len(key["x"]) == 16 and set(key["x"]) <= {1, 2, 3, 4, 5}
        assert "copy budget r = 2" in err

    def test_deterministic(self, capsys):
        a = run(capsys, "keygen", "--r", 2, "--s", 16, "--seed", 7)[1]
        b = run(capsys, "keygen", "--r", 2, "--s", 16, "--seed", 7)[1]
        assert a == b

    def test_files(self, capsys, tmp_path):
        path = tmp_path / "alice.json"
        assert run(capsys, "keygen", "--r", 3, "--s", 8, "--seed", 1, "--out", path)[0] == 0
        assert stat.S_IMODE(os.stat(path).st_mode) == 0o600
        pub = json.loads((tmp_path / "alice.pub.json").read_text())
        assert "x" not in pub and pub["copy_budget"] == 3

    @pytest.mark.parametrize("argv", [["--r", 0, "--s", 4], ["--r", 65, "--s", 4], ["--r", 1, "--s", 4097]])
    def test_parameter_errors(self, capsys, argv):
        code, _, err = run(capsys, "keygen", *argv)
        assert code == 2 and "must lie in" in err

    def test_seed_env_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("QPK_SEED", "7")
        a = run(capsys, "keygen", "--r", 2, "--s", 16)[1]
        monkeypatch.delenv("QPK_SEED")
        assert a == run(capsys, "keygen", "--r", 2, "--s", 16, "--seed", 7)[1]


class TestSimulate:
    def test_honest(self, capsys):
        code, out, _ = run(capsys, "simulate", "--r", 2, "--s", 32, "--trials", 2000, "--seed", 1, "--format", "json")
        rep = json.loads(out)
        assert code == 0 and rep["results"][0]["estimate"] == 1.0 and rep["config"]["seed"] == 1

    def test_attack_optimal_t1(self, capsys):
        code, out, _ = run(capsys, "attack", "--r", 1, "--s", 10, "--trials", 10**5, "--seed", 1, "--format", "json")
        rep = json.loads(out)
        row = {r["metric"]: r for r in rep["results"]}["single_attempt_acceptance"]
        assert code == 0 and rep["pass"]
        assert row["analytic"] == pytest.approx(0.75**10)
        assert abs(row["estimate"] - 0.75**10) <= 4 * row["stderr"]
        assert row["bound"] == pytest.approx(bounds.break_probability_bound(1, 10))

    def test_attack_random(self, capsys):
        _, out, _ = run(capsys, "attack", "--r", 1, "--s", 10, "--strategy", "random", "--trials", 10**5,
                        "--seed", 2, "--format", "json")
        row = json.loads(out)["results"][1]
        sigma = math.sqrt(2**-10 * (1 - 2**-10) / 10**5)
        assert abs(row["estimate"] - 2**-10) <= 4 * sigma

    def test_every_estimate_has_trials_and_stderr(self, capsys):
        _, out, _ = run(capsys, "attack", "--r", 2, "--s", 4, "--t-prime", 1, "--trials", 1000, "--seed", 3,
                        "--format", "json")
        for row in json.loads(out)["results"]:
            if row["estimate"] is not None:
                assert row["trials"] == 1000 and row["stderr"] >= 0

    def test_reproducible(self, capsys):
        argv = ["attack", "--r", 2, "--s", 6, "--trials", 5000, "--seed", 4, "--format", "json"]
        a = strip_clock(json.loads(run(capsys, *argv)[1]))
        b = strip_clock(json.loads(run(capsys, *argv, "--workers", 3)[1]))
        assert a == b

    def test_bad_t_prime(self, capsys):
        assert run(capsys, "attack", "--r", 2, "--s", 4, "--t-prime", 2)[0] == 2

    def test_text_table(self, capsys):
        code, out, _ = run(capsys, "attack", "--r", 1, "--s", 2, "--trials", 100, "--seed", 1)
        assert code == 0 and "single_attempt_acceptance" in out


class TestBound:
    def test_epsilon(self, capsys):
        code, out, _ = run(capsys, "bound", "--r", 1, "--epsilon", 0.01, "--format", "json")
        rep = json.loads(out)
        assert code == 0 and rep["required_s"] == 95 and rep["required_s_exact"] <= 95

    def test_s(self, capsys):
        rep = json.loads(run(capsys, "bound", "--r", 1, "--s", 95, "--format", "json")[1])
        assert rep["p_break_bound"] == pytest.approx(0.0087, abs=5e-5)

    def test_text(self, capsys):
        out = run(capsys, "bound", "--r", 1, "--epsilon", 0.01)[1]
        assert "required s (theorem)     95" in out

    @pytest.mark.parametrize("extra", [[], ["--s", 4, "--epsilon", 0.1]])
    def test_exactly_one_of_s_epsilon(self, capsys, extra):
        code, _, err = run(capsys, "bound", "--r", 1, *extra)
        assert code == 2 and "exactly one" in err

    def test_csv(self, capsys):
        out = run(capsys, "bound", "--r", 3, "--s", 40, "--t-prime", 1, "--format", "csv")[1]
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 2
        assert float(rows[0]["attempt_bound"]) == bounds.attempt_bound(1, 4, 40)


class TestVerify:
    def test_only_eig(self, capsys):
        code, out, _ = run(capsys, "verify", "--only", "eig", "--t-max", 16, "--format", "json")
        rep = json.loads(out)
        assert code == 0 and len(rep["results"]) == 16
        assert {"check", "params", "deviation", "tolerance", "pass"} <= set(rep["results"][0])

    def test_fault_injection(self, capsys):
        code, out, _ = run(capsys, "verify", "--only", "povm", "--inject-fault", "povm", "--format", "json")
        rep = json.loads(out)
        failed = {r["check"] for r in rep["results"] if not r["pass"]}
        assert code == 1 and "povm-completeness" in failed

    def test_unknown_check(self, capsys):
        assert run(capsys, "verify", "--only", "nope")[0] == 2

    def test_t_max_cap(self, capsys):
        assert run(capsys, "verify", "--only", "eig", "--t-max", 17)[0] == 2

    def test_comma_list(self, capsys):
        code, out, _ = run(capsys, "verify", "--only", "bounds,closed-form", "--t-max", 4, "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and {r["check"] for r in rows} >= {"closed-form", "required-s"}


class TestSweep:
    def test_alpha_increasing_in_t(self, capsys):
        code, out, _ = run(capsys, "sweep", "--t", "1-8", "--s", 1, "--trials", 1000, "--seed", 0)
        rows = list(csv.DictReader(io.StringIO(out)))
        alphas = [float(r["alpha"]) for r in rows]
        assert code == 0 and len(rows) == 8 and all(a < b for a, b in zip(alphas, alphas[1:]))
        assert list(rows[0]) == SWEEP_COLUMNS

    def test_log_bound_linear_in_s(self, capsys):
        r = 3
        out = run(capsys, "sweep", "--r", r, "--s", "400,440,480,520", "--trials", 100, "--seed", 0)[1]
        rows = list(csv.DictReader(io.StringIO(out)))
        logs = np.log([float(x["bound"]) for x in rows])
        assert np.all(logs < 0)  # below the clamp
        slopes = np.diff(logs) / 40
        assert np.allclose(slopes, math.log1p(-bounds.c_const() / (2 * r + 1) ** 2), atol=1e-12)

    def test_csv_json_round_trip(self, capsys):
        argv = ["sweep", "--r", "1,2", "--s", "3,5", "--trials", 2000, "--seed", 5]
        rows_csv = list(csv.DictReader(io.StringIO(run(capsys, *argv)[1])))
        rows_json = json.loads(run(capsys, *argv, "--format", "json")[1])["results"]
        assert len(rows_csv) == len(rows_json) == 4
        for c, j in zip(rows_csv, rows_json):
            for col in SWEEP_COLUMNS:
                assert type(j[col])(c[col]) == j[col]

    @pytest.mark.parametrize("argv", [["--r", ",", "--s", 4], ["--s", 4], ["--t", 17, "--s", 1], ["--r", 2, "--t", 4, "--s", 1]])
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, "sweep", *argv)[0] == 2
