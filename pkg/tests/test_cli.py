import csv
import hashlib
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from repfusion.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
EXAMPLE = str(CONFIGS / "exponential_example.json")
LINEAR = str(CONFIGS / "linear.json")
CONCAVE = str(CONFIGS / "log_concave.json")
SIMULATE = str(CONFIGS / "simulate_two_units.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


class TestPlan:
    def test_example(self, capsys):
        code, out, _ = run(capsys, "plan", "--config", EXAMPLE, "--tau", "0.5")
        assert code == 0
        d = json.loads(out)
        assert d["n_o"] == 1
        assert d["regime"] == "convex_thresholded"
        assert d["weights"] == [1.0]

    def test_fused(self, capsys):
        code, out, _ = run(capsys, "plan", "--config", EXAMPLE, "--tau", "0.05")
        d = json.loads(out)
        assert code == 0 and d["n_o"] == 10
        assert d["achieved_mse"] == pytest.approx(0.05, rel=1e-12)

    def test_linear(self, capsys):
        code, out, _ = run(capsys, "plan", "--config", LINEAR, "--tau", "0.1")
        d = json.loads(out)
        assert code == 0
        assert d["regime"] == "linear_always_single" and d["n_o"] == 1

    @pytest.mark.parametrize("tau", ["0", "-1", "nan"])
    def test_bad_tau(self, capsys, tau):
        code, _, err = run(capsys, "plan", "--config", EXAMPLE, "--tau", tau)
        assert code == 3
        assert "error" in err

    def test_missing_tau(self, capsys):
        assert run(capsys, "plan", "--config", EXAMPLE)[0] == 2


class TestSweep:
    def test_argmin_rows(self, capsys):
        code, out, _ = run(capsys, "sweep", "--config", EXAMPLE, "--tau-list", "0.5,0.1,0.05", "--n-max", "20")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 60
        argmins = {float(r["tau"]): int(r["n"]) for r in rows if r["is_argmin"] == "true"}
        assert argmins == {0.5: 1, 0.1: 5, 0.05: 10}

    def test_values_round_trip(self, capsys):
        _, out, _ = run(capsys, "sweep", "--config", EXAMPLE, "--tau-list", "0.1", "--n-max", "6")
        last = out.strip().splitlines()[-1].split(",")
        assert float(last[2]) == pytest.approx(72.76694030282018, rel=1e-15)

    def test_n_max_one(self, capsys):
        code, out, _ = run(capsys, "sweep", "--config", EXAMPLE, "--tau-list", "0.1", "--n-max", "1")
        assert code == 0
        assert out.strip().splitlines()[1].endswith(",1,22032.465794806718,true")

    @pytest.mark.parametrize("lst", ["", ",", "a,b"])
    def test_bad_tau_list(self, capsys, lst):
        assert run(capsys, "sweep", "--config", EXAMPLE, "--tau-list", lst)[0] == 2

    def test_bad_n_max(self, capsys):
        assert run(capsys, "sweep", "--config", EXAMPLE, "--tau-list", "0.1", "--n-max", "0")[0] == 3


class TestThreshold:
    def test_region_flip(self, capsys):
        code, out, _ = run(capsys, "threshold", "--config", EXAMPLE, "--tau-list", "0.50,0.51,1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "tau,v_tau,cutoff,region"
        rows = list(csv.DictReader(io.StringIO("\n".join(lines[:4]))))
        assert [r["region"] for r in rows] == ["fused", "single", "single"]
        assert float(rows[2]["v_tau"]) == pytest.approx(1.0, abs=1e-15)
        assert float(rows[2]["cutoff"]) == 8.0
        t_line = [ln for ln in lines if ln.startswith("T=")]
        assert float(t_line[0][2:]) == pytest.approx(0.5068067304173033, rel=1e-8)

    @pytest.mark.parametrize("cfg", [LINEAR, CONCAVE])
    def test_always_single_rejected(self, capsys, cfg):
        code, _, err = run(capsys, "threshold", "--config", cfg, "--tau-list", "0.1")
        assert code == 3
        assert "always optimal" in err


class TestSimulate:
    def test_report(self, capsys):
        code, out, _ = run(capsys, "simulate", "--config", SIMULATE, "--trials", "100000")
        assert code == 0
        d = json.loads(out)
        assert d["analytic_mse"] == 0.5
        assert abs(d["empirical_mse"] - 0.5) <= 3 * d["mse_std_err"]
        assert [t["epsilon"] for t in d["tail_estimates"]] == [0.5, 1.0, 2.0]

    def test_zero_trials(self, capsys):
        assert run(capsys, "simulate", "--config", SIMULATE, "--trials", "0")[0] == 3

    def test_bad_kind(self, capsys, tmp_path):
        cfg = write_json(tmp_path, {"kind": "cauchy", "theta": [1.0]})
        assert run(capsys, "simulate", "--config", cfg)[0] == 2

    def test_byte_identical(self, capsys, tmp_path):
        outs = []
        for i, workers in enumerate(("1", "3")):
            path = tmp_path / f"r{i}.json"
            assert run(capsys, "simulate", "--config", SIMULATE, "--trials", "150000",
                       "--workers", workers, "--out", str(path))[0] == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]


class TestVerify:
    @pytest.mark.parametrize("name", ["exponential_example", "quadratic", "linear", "log_concave"])
    def test_shipped_configs_pass(self, capsys, name):
        code, out, _ = run(capsys, "verify", "--config", str(CONFIGS / f"{name}.json"))
        assert code == 0
        assert "FAIL" not in out

    def test_concave_skips_threshold(self, capsys):
        _, out, _ = run(capsys, "verify", "--config", CONCAVE)
        assert any(ln.startswith("SKIP threshold_T") for ln in out.splitlines())

    def test_negative_alpha(self, capsys, tmp_path):
        cfg = write_json(tmp_path, {
            "cost": {"c_min": 1.0, "incremental": {"kind": "exponential", "alpha": -1.0, "beta": 1.0}},
            "fusion": {"kind": "linear_minus_one", "gamma": 1.0},
        })
        code, _, err = run(capsys, "verify", "--config", cfg)
        assert code == 2
        assert "alpha" in err


class TestInputErrors:
    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "plan", "--config", str(tmp_path / "nope.json"), "--tau", "1")[0] == 2

    def test_invalid_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert run(capsys, "plan", "--config", str(p), "--tau", "1")[0] == 2

    def test_unknown_field(self, capsys, tmp_path):
        cfg = write_json(tmp_path, {
            "cost": {"c_min": 1.0, "incremental": {"kind": "linear", "alpha": 1.0}},
            "fusion": {"kind": "linear_minus_one", "gamma": 1.0},
            "extra": 1,
        })
        assert run(capsys, "plan", "--config", cfg, "--tau", "1")[0] == 2

    def test_no_command(self, capsys):
        assert run(capsys)[0] == 2


class TestManifest:
    def test_written_with_digest(self, capsys, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run(capsys, "sweep", "--config", EXAMPLE, "--tau-list", "0.1", "--n-max", "3",
                   "--out", str(out))[0] == 0
        m = json.loads(Path(str(out) + ".manifest.json").read_text())
        assert m["command"] == "sweep"
        assert m["outputs"] == [str(out)]
        assert m["tool_version"] == "0.1.0"
        resolved = {
            "cost": {"c_min": 7.0, "incremental": {"kind": "exponential", "alpha": 1.0, "beta": 1.0}},
            "fusion": {"kind": "linear_minus_one", "gamma": 1.0},
            "params": {"tau_list": [0.1], "n_max": 3},
        }
        blob = json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()
        assert m["config_digest"] == hashlib.sha256(blob).hexdigest()

    def test_simulate_records_seed(self, capsys, tmp_path):
        out = tmp_path / "sim.json"
        run(capsys, "simulate", "--config", SIMULATE, "--trials", "1000", "--seed", "5", "--out", str(out))
        assert json.loads(Path(str(out) + ".manifest.json").read_text())["seed"] == 5


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "repfusion", "plan", "--config", EXAMPLE, "--tau", "0.1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n_o"] == 5
