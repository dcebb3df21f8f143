import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from berrycross import __version__
from berrycross.cli import TRAJECTORY_COLUMNS, run_cli
from berrycross.config import load_scenario, load_sweep, validate
from berrycross.errors import ContractError
from berrycross.evolution import evolve_adiabatic
from berrycross.scenarios import SWEEP_COLUMNS

DOCS = Path(__file__).resolve().parents[1] / "docs"
ADIABATIC = DOCS / "scenarios" / "adiabatic_reference.json"
TILTED = DOCS / "scenarios" / "tilted_reference.json"


def cli(*argv):
    out = io.StringIO()
    code = run_cli([str(a) for a in argv], out)
    return code, out.getvalue()


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def data_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema=1")
    return list(csv.DictReader(lines[1:]))


class TestSimulate:
    def test_adiabatic_reference(self):
        code, out = cli("simulate", ADIABATIC, "--no-timestamp")
        assert code == 0
        doc = json.loads(out)
        assert doc["schema"] == 1 and doc["kind"] == "field_sweep"
        assert abs(math.remainder(doc["geometric_phase"] - doc["adiabatic_geometric_phase"], 2 * math.pi)) \
            < 0.02 * math.pi
        assert doc["cyclicity_fidelity"] > 0.99
        assert doc["below_fidelity_floor"] is False

    def test_tilted_against_adiabatic_phase(self):
        code, out = cli("simulate", TILTED, "--no-timestamp")
        doc = json.loads(out)
        spec = load_scenario(TILTED)
        expected = evolve_adiabatic(spec.build_path())[1]
        assert expected == pytest.approx(math.pi * (1 - math.cos(math.pi / 3)), abs=1e-9)
        assert doc["geometric_phase"] == pytest.approx(expected, abs=0.02)

    def test_deterministic_bytes(self):
        a = cli("simulate", ADIABATIC, "--no-timestamp")[1]
        b = cli("simulate", ADIABATIC, "--no-timestamp")[1]
        assert a == b
        assert '"generated"' in cli("simulate", ADIABATIC)[1]

    def test_overrides(self):
        doc = json.loads(cli("simulate", ADIABATIC, "--no-timestamp", "--integrator", "rk_adaptive",
                             "--tolerance", "1e-9")[1])
        assert doc["integrator"] == "rk_adaptive"

    def test_trajectory_csv(self, tmp_path):
        traj = tmp_path / "traj.csv"
        code, _ = cli("simulate", TILTED, "--no-timestamp", "--trajectory", traj)
        assert code == 0
        rows = data_rows(traj.read_text())
        assert tuple(rows[0]) == TRAJECTORY_COLUMNS
        assert float(rows[0]["t"]) == 0.0
        for row in rows[:: max(1, len(rows) // 20)]:
            assert float(row["norm"]) == pytest.approx(1.0, abs=1e-9)
            assert float(row["instantaneous_E_plus"]) == pytest.approx(200.0)
            assert float(row["instantaneous_E_minus"]) == pytest.approx(-200.0)


class TestSweep:
    def test_three_by_three(self, tmp_path):
        cfg = write(tmp_path, {"hbar": 1.0, "base": {"mu": 1.0},
                               "grid": {"B0": [0.1, 1.0, 10.0], "omega": {"linspace": [0.5, 1.5, 3]}}})
        code, out = cli("sweep", cfg, "--no-timestamp", "--threads", "3")
        assert code == 0
        rows = data_rows(out)
        assert len(rows) == 9
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert [int(r["index"]) for r in rows] == list(range(9))
        assert all(r["status"] == "ok" and r["runtime_ms"] == "" for r in rows)

    def test_output_file_and_determinism(self, tmp_path):
        cfg = write(tmp_path, {"hbar": 1.0, "base": {"mu": 1.0}, "grid": {"B0": [0.5, 2.0], "omega": [1.0]}})
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli("sweep", cfg, "--no-timestamp", "-o", out_a) == (0, "")
        cli("sweep", cfg, "--no-timestamp", "--threads", "2", "-o", out_b)
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_reference_sweep_monotone_where_cyclic(self):
        code, out = cli("sweep", DOCS / "scenarios" / "reference_sweep.json", "--no-timestamp")
        rows = [r for r in data_rows(out) if float(r["cyclicity_fidelity"]) >= 0.98]
        mags = [abs(float(r["geometric_phase"])) for r in rows]
        assert code == 0 and len(rows) >= 12
        assert all(b >= a - 0.02 for a, b in zip(mags, mags[1:]))

    def test_failed_point_kept(self, tmp_path, capsys):
        cfg = write(tmp_path, {"hbar": 1.0, "base": {"mu": 1.0}, "grid": {"B0": [0.0, 1.0], "omega": [1.0]}})
        code, out = cli("sweep", cfg, "--no-timestamp")
        rows = data_rows(out)
        assert code == 0 and rows[0]["status"].startswith("error") and rows[0]["geometric_phase"] == ""
        assert "1 of 2" in capsys.readouterr().err


class TestConnectionCheck:
    def test_table(self):
        code, out = cli("connection-check", TILTED, "--no-timestamp")
        rows = data_rows(out)
        assert code == 0 and len(rows) == 6 * 4
        assert max(float(r["abs_error"]) for r in rows) < 1e-6

    def test_samples_flag(self, tmp_path):
        doc = json.loads(ADIABATIC.read_text())
        code, out = cli("connection-check", write(tmp_path, doc), "--samples", "3", "--no-timestamp")
        assert len(data_rows(out)) == 12


class TestScenarioCommand:
    def test_shrink_rotate_return(self):
        code, out = cli("scenario", "shrink-rotate-return", "--r-small", "2e-4", "--T", "10", "--no-timestamp")
        doc = json.loads(out)
        assert code == 0
        assert doc["rotation_action"] == pytest.approx(1e-3)
        assert doc["solid_angle"] == pytest.approx(2 * math.pi)
        assert abs(doc["geometric_phase"]) < 0.05

    def test_bad_split(self, capsys):
        code, _ = cli("scenario", "shrink-rotate-return", "--r-small", "0.1", "--T", "1", "--split", "0.5,0.6,0.1")
        assert code == 2
        assert "split" in capsys.readouterr().err


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        code, _ = cli("bogus")
        assert code == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli("simulate", tmp_path / "nope.json")[0] == 2

    def test_invalid_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{")
        assert cli("simulate", p)[0] == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_schema_error_names_key(self, tmp_path, capsys):
        doc = {"kind": "field_sweep", "hbar": 1.0, "model": {"B0": 1.0, "omega": 1.0, "mu": 1.0, "Bx": 2}}
        assert cli("simulate", write(tmp_path, doc))[0] == 2
        assert "Bx" in capsys.readouterr().err

    def test_missing_required_key(self, tmp_path, capsys):
        doc = {"kind": "field_sweep", "hbar": 1.0, "model": {"B0": 1.0, "mu": 1.0}}
        assert cli("simulate", write(tmp_path, doc))[0] == 2
        assert "omega" in capsys.readouterr().err

    def test_model_contract_violation(self, tmp_path):
        doc = {"kind": "field_sweep", "hbar": 1.0, "model": {"B0": 1.0, "omega": 0.0, "mu": 1.0}}
        assert cli("simulate", write(tmp_path, doc))[0] == 2

    def test_numerical_failure(self, tmp_path, capsys):
        doc = {"kind": "field_sweep", "hbar": 1.0, "model": {"B0": 50.0, "omega": 1.0, "mu": 1.0},
               "evolution": {"rel_tol": 1e-14, "abs_tol": 1e-16, "max_steps": 64}}
        assert cli("simulate", write(tmp_path, doc))[0] == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_degenerate_start(self, tmp_path):
        doc = {"kind": "field_sweep", "hbar": 1.0, "model": {"B0": 0.0, "omega": 1.0, "mu": 1.0}}
        assert cli("simulate", write(tmp_path, doc))[0] == 3

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "berrycross", "--version"], capture_output=True, text=True)
        assert proc.returncode == 0 and __version__ in proc.stdout
        proc = subprocess.run([sys.executable, "-m", "berrycross", "frobnicate"], capture_output=True, text=True)
        assert proc.returncode == 2 and "usage" in proc.stderr


class TestConfig:
    def test_shipped_schemas_match_docs(self):
        from berrycross.config import load_schema

        for name in ("scenario", "sweep"):
            assert load_schema(name) == json.loads((DOCS / f"{name}.schema.json").read_text())

    def test_reference_configs_valid(self):
        for p in sorted((DOCS / "scenarios").glob("*.json")):
            doc = json.loads(p.read_text())
            validate(doc, "sweep" if "grid" in doc else "scenario")

    def test_sweep_axes(self):
        spec = load_sweep({"hbar": 2.0, "base": {"mu": 1.0, "Bz": 0.5},
                           "grid": {"B0": {"logspace": [0.01, 1.0, 3]}, "omega": [1, 2]}})
        assert spec.B0_values == pytest.approx([0.01, 0.1, 1.0])
        assert spec.omega_values == [1.0, 2.0]
        assert spec.base_model().Bz == 0.5
        assert spec.evolution_config().hbar == 2.0

    def test_sweep_requires_mu(self):
        with pytest.raises(ContractError, match="mu"):
            load_sweep({"hbar": 1.0, "base": {}, "grid": {"B0": [1.0], "omega": [1.0]}})

    def test_scenario_kinds_build(self):
        docs = [
            {"kind": "no_crossing", "hbar": 1.0, "model": {"delta_E": 1.0, "g": 1.0, "B0": 1.0, "omega": 1.0}},
            {"kind": "shrink_rotate_return", "hbar": 1.0,
             "model": {"theta": 1.0, "phi": 0.0, "r_start": 1.0, "r_small": 0.1, "T": 5.0, "g": 1.0}},
            {"kind": "custom", "hbar": 1.0, "model": {"period_T": 1.0, "mean": [0, 0, 0, 1], "g": 1.0}},
        ]
        for doc in docs:
            path = load_scenario(doc).build_path()
            assert path.closed

    def test_overrides_skip_none(self):
        spec = load_scenario(ADIABATIC)
        cfg = spec.evolution_config(rel_tol=None, integrator="midpoint_exponential")
        assert cfg.rel_tol == 1e-10 and cfg.integrator == "midpoint_exponential"
