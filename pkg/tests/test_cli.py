import csv
import json

import numpy as np
import pytest

from ile import cli, fock, protocol

PLAN = {
    "eta": 0.1,
    "omega": 0.05,
    "delta": 0.97,
    "n_ions": 2,
    "alpha": [0.3, 0.0],
    "cycles": [{"t": 80.0, "p": [[0.3, 0.2], [0.0, -0.4]]}],
}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def run(argv):
    return cli.main(argv)


class TestPlanCommand:
    def test_balanced_cat(self, tmp_path, capsys):
        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [0, 0], [1, 0]]})
        out = tmp_path / "sol.json"
        assert run(["plan", "--input", target, "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        weights = [complex(re, im) for re, im in doc["weights"]]
        assert sorted(w.imag for w in weights) == [-1.0, 1.0]
        assert max(abs(w.real) for w in weights) <= 1e-12
        assert doc["p_nominal"] == 1 / 64
        assert doc["residual"] <= 1e-9

    def test_binomial_target(self, tmp_path):
        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [2, 0], [1, 0]]})
        out = tmp_path / "sol.json"
        assert run(["plan", "--input", target, "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["p_nominal"] == pytest.approx(1 / 16, abs=1e-12)
        assert max(abs(complex(re, im)) for re, im in doc["weights"]) <= 1e-7

    def test_all_flag_lists_solutions(self, tmp_path):
        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [0, 0], [1, 0]]})
        out = tmp_path / "sol.json"
        assert run(["plan", "--input", target, "--output", str(out), "--all"]) == 0
        doc = json.loads(out.read_text())
        assert "solutions" in doc and len(doc["solutions"]) >= 1

    def test_malformed_json_exits_2_without_output(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        out = tmp_path / "never.json"
        assert run(["plan", "--input", str(bad), "--output", str(out)]) == 2
        assert not out.exists()
        assert "error" in capsys.readouterr().err

    def test_unsolvable_target_exits_3(self, tmp_path, capsys):
        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [-1, 0]]})
        assert run(["plan", "--input", target]) == 3
        assert "solver error" in capsys.readouterr().err


class TestSimulateCommand:
    def test_single_ion_single_cycle(self, tmp_path):
        plan = dict(PLAN, n_ions=1, cycles=[{"t": 80.0, "p": [[0, 0]]}])
        path = write_json(tmp_path / "p.json", plan)
        out = tmp_path / "r.json"
        assert run(["simulate", "--input", path, "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["p_nominal"] == 0.25
        coeffs = [complex(re, im) for re, im in doc["coeffs"]]
        assert coeffs == [1, 1]
        assert doc["per_cycle"] and abs(np.prod(doc["per_cycle"]) - doc["p_exact"]) < 1e-12

    def test_plan_simulate_roundtrip(self, tmp_path):
        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [0, 0], [1, 0]]})
        sol_path = tmp_path / "sol.json"
        assert run(["plan", "--input", target, "--output", str(sol_path)]) == 0
        sol = json.loads(sol_path.read_text())
        plan = dict(PLAN, n_ions=2, cycles=[{"t": 80.0, "p": sol["weights"]}])
        out = tmp_path / "r.json"
        assert run(["simulate", "--input", write_json(tmp_path / "p.json", plan), "--output", str(out)]) == 0
        coeffs = np.array([complex(re, im) for re, im in json.loads(out.read_text())["coeffs"]])
        want = np.array([1.0, 0.0, 1.0])
        scale = np.vdot(coeffs, want) / np.vdot(coeffs, coeffs)
        assert np.linalg.norm(scale * coeffs - want) / np.linalg.norm(want) <= 1e-9

    def test_fock_dump_norm_matches_gram(self, tmp_path):
        path = write_json(tmp_path / "p.json", PLAN)
        out = tmp_path / "r.json"
        assert run(["simulate", "--input", path, "--output", str(out), "--fock", "64"]) == 0
        doc = json.loads(out.read_text())
        vec = fock.FockVector.from_json(doc["fock"])
        plan = cli._plan_from_json(PLAN)
        state = protocol.run_ideal(plan).state
        assert abs(fock.norm(vec) ** 2 - state.norm_sq()) <= 1e-8

    def test_unequal_durations_exit_2(self, tmp_path):
        plan = dict(
            PLAN,
            n_ions=1,
            cycles=[{"t": 80.0, "p": [[0, 0]]}, {"t": 81.0, "p": [[0, 0]]}],
        )
        path = write_json(tmp_path / "p.json", plan)
        assert run(["simulate", "--input", path]) == 2


class TestLeakageCommand:
    def test_sweep_two_points(self, tmp_path):
        path = write_json(tmp_path / "p.json", PLAN)
        out = tmp_path / "r.csv"
        assert run([
            "leakage", "--input", path, "--output", str(out),
            "--sweep", "delta=0.95:0.99:2",
        ]) == 0
        rows = list(csv.reader(out.read_text().splitlines()))
        assert len(rows) == 3  # header + 2 points
        header = rows[0]
        for col in ("delta", "t", "com_fidelity", "gap", "mean_phonon_1", "mean_phonon_2"):
            assert col in header
        deltas = [float(r[header.index("delta")]) for r in rows[1:]]
        assert deltas == [0.95, 0.99]

    def test_single_ion_gap_is_zero(self, tmp_path):
        plan = dict(PLAN, n_ions=1, cycles=[{"t": 80.0, "p": [[0.3, 0.2]]}])
        path = write_json(tmp_path / "p.json", plan)
        out = tmp_path / "r.csv"
        assert run(["leakage", "--input", path, "--output", str(out)]) == 0
        rows = list(csv.reader(out.read_text().splitlines()))
        gap = float(rows[1][rows[0].index("gap")])
        assert gap <= 1e-12

    def test_variant_column(self, tmp_path):
        path = write_json(tmp_path / "p.json", PLAN)
        out = tmp_path / "r.csv"
        assert run(["leakage", "--input", path, "--output", str(out), "--paper-beta"]) == 0
        rows = list(csv.reader(out.read_text().splitlines()))
        assert rows[1][rows[0].index("variant")] == "paper"

    def test_term_cap_marks_row_incomplete(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ILE_MAX_TERMS", "2")
        path = write_json(tmp_path / "p.json", PLAN)
        out = tmp_path / "r.csv"
        assert run(["leakage", "--input", path, "--output", str(out)]) == 0
        rows = list(csv.reader(out.read_text().splitlines()))
        idx = rows[0].index("complete")
        assert rows[1][idx] == "false"
        assert rows[1][rows[0].index("p_exact")] == ""

    def test_bad_sweep_spec(self, tmp_path):
        path = write_json(tmp_path / "p.json", PLAN)
        assert run(["leakage", "--input", path, "--sweep", "delta=0:1:1"]) == 2
        assert run(["leakage", "--input", path, "--sweep", "omega=0:1:3"]) == 2

    def test_json_single_point(self, tmp_path):
        path = write_json(tmp_path / "p.json", PLAN)
        out = tmp_path / "r.json"
        assert run(["leakage", "--input", path, "--output", str(out), "--format", "json"]) == 0
        doc = json.loads(out.read_text())
        for key in ("mean_phonon", "com_fidelity", "com_purity", "factorization_gap", "p_exact"):
            assert key in doc
        assert len(doc["mean_phonon"]) == 2
        assert run(["leakage", "--input", path, "--format", "json", "--sweep", "t=1:2:2"]) == 2


class TestModesCommand:
    def test_json_two_ions(self, tmp_path):
        out = tmp_path / "m.json"
        assert run(["modes", "2", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["mu"][0] == 1.0
        assert abs(doc["mu"][1] - np.sqrt(3)) < 1e-8
        assert len(doc["b"]) == 2 and len(doc["positions"]) == 2

    def test_json_three_ions(self, tmp_path):
        out = tmp_path / "m.json"
        assert run(["modes", "3", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert abs(doc["mu"][2] - np.sqrt(29 / 5)) < 1e-6

    def test_csv_layout(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run(["modes", "3", "--format", "csv", "--output", str(out)]) == 0
        rows = list(csv.reader(out.read_text().splitlines()))
        assert rows[0] == ["n_ions", "mode", "mu", "b_1", "b_2", "b_3"]
        assert len(rows) == 4  # header + one row per mode


class TestFitCommand:
    def test_coherent_on_own_grid(self, tmp_path):
        target = fock.coherent_fock(0.3, 48)
        path = write_json(tmp_path / "t.json", target.to_json())
        out = tmp_path / "f.json"
        assert run([
            "fit", "--input", path, "--output", str(out),
            "--n", "2", "--alpha", "0.3", "--beta", "0.9",
        ]) == 0
        doc = json.loads(out.read_text())
        assert doc["fidelity"] >= 1 - 1e-10

    def test_complex_beta_argument(self, tmp_path):
        target = fock.coherent_fock(0.2j, 32)
        path = write_json(tmp_path / "t.json", target.to_json())
        out = tmp_path / "f.json"
        assert run([
            "fit", "--input", path, "--output", str(out),
            "--n", "2", "--alpha", "0,0.2", "--beta", "0,0.5",
        ]) == 0
        assert json.loads(out.read_text())["fidelity"] >= 1 - 1e-10


class TestValidateCommand:
    def test_report_fields(self, tmp_path):
        out = tmp_path / "v.json"
        assert run([
            "validate", "--eta", "0.05", "--omega", "0.005", "--delta", "0.99",
            "--t", "100", "--steps", "10", "--cutoff", "12", "--weights", "1",
            "--output", str(out),
        ]) == 0
        doc = json.loads(out.read_text())
        assert doc["fidelity_integrated"] >= doc["fidelity_endpoint"]
        assert 3.0 <= doc["step_halving_ratio"] <= 5.0
        assert doc["fast_terms_effect"] is None


class TestInstalledEntryPoint:
    def test_exit_codes_from_subprocess(self, tmp_path):
        import subprocess
        import sys

        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [0, 0], [1, 0]]})
        ok = subprocess.run(
            [sys.executable, "-m", "ile.cli", "plan", "--input", target],
            capture_output=True,
        )
        assert ok.returncode == 0
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        invalid = subprocess.run(
            [sys.executable, "-m", "ile.cli", "plan", "--input", str(bad)],
            capture_output=True,
        )
        assert invalid.returncode == 2
        unsolvable = write_json(tmp_path / "u.json", {"coeffs": [[1, 0], [-1, 0]]})
        failed = subprocess.run(
            [sys.executable, "-m", "ile.cli", "plan", "--input", unsolvable],
            capture_output=True,
        )
        assert failed.returncode == 3
        assert b"solver error" in failed.stderr


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        target = write_json(tmp_path / "t.json", {"coeffs": [[1, 0], [0.4, 0.3], [0.9, -0.2]]})
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["plan", "--input", target, "--output", str(a), "--all"]) == 0
        assert run(["plan", "--input", target, "--output", str(b), "--all"]) == 0
        assert a.read_bytes() == b.read_bytes()

        plan_path = write_json(tmp_path / "p.json", PLAN)
        c, d = tmp_path / "c.csv", tmp_path / "d.csv"
        for out in (c, d):
            assert run([
                "leakage", "--input", plan_path, "--output", str(out),
                "--sweep", "t=50:90:3",
            ]) == 0
        assert c.read_bytes() == d.read_bytes()
