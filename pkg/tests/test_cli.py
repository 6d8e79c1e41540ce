"""Tests for the command-line interface and file round-trips."""

import json

import numpy as np
import pytest

from scenariocert.cli import RunConfig, _merge_dash_values, main
from scenariocert.core import ScenarioSet
from scenariocert.fileio import load_scenarios, round_floats, save_scenarios
from scenariocert.problems import sample_input_design_scenarios, sample_pendulum_scenarios


@pytest.fixture()
def pendulum_file(tmp_path):
    payloads = sample_pendulum_scenarios(30, 17)
    ss = ScenarioSet.from_payloads(payloads, {"sampler": "pendulum", "seed": 17})
    path = tmp_path / "pend.json"
    save_scenarios(str(path), "pole-placement", ss)
    return path


@pytest.fixture()
def matrix_file(tmp_path):
    payloads = sample_input_design_scenarios(60, 23)
    ss = ScenarioSet.from_payloads(payloads, {"sampler": "state-matrix", "seed": 23})
    path = tmp_path / "mats.json"
    save_scenarios(str(path), "input-design", ss)
    return path


class TestArgvPreprocessing:

    def test_negative_values_merged(self):
        argv = ["example", "pole-placement", "--sector", "-0.7:0.5",
                "--grid", "-0.15:0:100", "--out", "x.json"]
        merged = _merge_dash_values(argv)
        assert "--sector=-0.7:0.5" in merged
        assert "--grid=-0.15:0:100" in merged
        assert "--out" in merged and "x.json" in merged

    def test_positive_values_untouched(self):
        argv = ["cdf", "--grid", "0:1:10"]
        assert _merge_dash_values(argv) == argv


class TestRunConfig:

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            RunConfig("epsilon", {"beta": 2.0})

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            RunConfig("epsilon", {"n": 0, "beta": 0.5})


class TestEpsilonCommand:

    def test_single_query_prints_value(self, capsys):
        assert main(["epsilon", "--n", "2000", "--beta", "1e-5",
                     "--k", "8", "--mode", "upper"]) == 0
        out = capsys.readouterr().out
        assert "0.0164417" in out

    def test_beta_out_of_range_exits_2(self, capsys):
        assert main(["epsilon", "--n", "10", "--beta", "2", "--k", "1"]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_missing_k_and_table_exits_2(self):
        assert main(["epsilon", "--n", "10", "--beta", "0.1"]) == 2

    def test_table_output_schema(self, tmp_path, capsys):
        out = tmp_path / "table.json"
        assert main(["epsilon", "--n", "30", "--beta", "0.01", "--table",
                     "--mode", "both", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["n"] == 30 and doc["beta"] == 0.01
        assert len(doc["rows"]) == 31
        assert doc["rows"][-1]["eps"] == 1.0
        assert doc["rows"][-1]["eps_hi"] == 1.0
        assert all(r["eps_lo"] <= r["eps_hi"] for r in doc["rows"])
        manifest = json.loads((tmp_path / "table.json.manifest.json").read_text())
        assert "table.json" in manifest["artifacts"]
        assert manifest["config"]["subcommand"] == "epsilon"

    def test_twelve_significant_digits(self, tmp_path):
        out = tmp_path / "q.json"
        main(["epsilon", "--n", "2000", "--beta", "1e-5", "--k", "8",
              "--out", str(out)])
        doc = json.loads(out.read_text())
        val = doc["rows"][0]["eps"]
        assert val == float(f"{val:.12g}")


class TestScenarioFiles:

    def test_round_trip_identity(self, pendulum_file):
        problem_id, ss = load_scenarios(str(pendulum_file))
        assert problem_id == "pole-placement"
        original = sample_pendulum_scenarios(30, 17)
        assert list(ss.scenarios) == original

    def test_round_trip_bytes(self, pendulum_file, tmp_path):
        _, ss = load_scenarios(str(pendulum_file))
        again = tmp_path / "again.json"
        save_scenarios(str(again), "pole-placement", ss)
        assert again.read_bytes() == pendulum_file.read_bytes()

    def test_matrix_round_trip(self, matrix_file):
        problem_id, ss = load_scenarios(str(matrix_file))
        assert problem_id == "input-design"
        original = sample_input_design_scenarios(60, 23)
        for a, b in zip(ss.scenarios, original):
            np.testing.assert_array_equal(a, b)

    def test_malformed_field_named_in_error(self, tmp_path):
        doc = {"problem": "pole-placement", "seed": 0, "sampler": "x",
               "scenarios": [{"M": 9.5, "l": 0.95, "alpha": 10.0},
                             {"M": "oops", "l": 0.95, "alpha": 10.0}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match=r"scenarios\[1\]\.M"):
            load_scenarios(str(path))

    def test_empty_scenario_list_rejected(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"problem": "pole-placement", "scenarios": []}))
        with pytest.raises(ValueError, match="nonempty"):
            load_scenarios(str(path))

    def test_unknown_problem_rejected(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"problem": "mystery", "scenarios": [1]}))
        with pytest.raises(ValueError, match="unknown problem"):
            load_scenarios(str(path))


class TestCertifyCommand:

    def test_report_written(self, pendulum_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["certify", "--problem", "pole-placement",
                     "--scenarios", str(pendulum_file), "--beta", "1e-3",
                     "--nondegenerate", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["sample_size"] == 30
        assert 0 <= doc["baseline_complexity"] <= 8
        assert doc["baseline_complexity"] <= doc["instrumental_complexity"]
        assert 0 < doc["risk_upper"] <= 1
        assert doc["general_interval"] is not None
        assert doc["total_confidence"] == pytest.approx(1 - 2e-3)
        assert (tmp_path / "report.json.manifest.json").exists()

    def test_problem_mismatch_exits_2(self, matrix_file, tmp_path):
        code = main(["certify", "--problem", "pole-placement",
                     "--scenarios", str(matrix_file), "--beta", "1e-3",
                     "--out", str(tmp_path / "r.json")])
        assert code == 2

    def test_missing_file_exits_2(self, tmp_path):
        code = main(["certify", "--problem", "pole-placement",
                     "--scenarios", str(tmp_path / "none.json"),
                     "--beta", "1e-3", "--out", str(tmp_path / "r.json")])
        assert code == 2


class TestCdfCommand:

    def test_envelope_and_csv(self, matrix_file, tmp_path):
        out = tmp_path / "env.json"
        code = main(["cdf", "--problem", "input-design",
                     "--scenarios", str(matrix_file), "--beta", "1e-7",
                     "--grid", "-0.15:0:25", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["levels"]) == 25
        assert doc["confidence"] == pytest.approx(1 - 25e-7)
        per = doc["per_level_complexity"]
        assert all(a >= b for a, b in zip(per, per[1:]))
        csv_lines = (tmp_path / "env.csv").read_text().strip().splitlines()
        assert csv_lines[0] == "level,lower,upper"
        assert len(csv_lines) == 26

    def test_cost_free_problem_exits_2(self, pendulum_file, tmp_path):
        code = main(["cdf", "--problem", "pole-placement",
                     "--scenarios", str(pendulum_file), "--beta", "1e-7",
                     "--grid", "0:1:5", "--out", str(tmp_path / "e.json")])
        assert code == 2


class TestExampleCommands:

    def test_pole_placement_small(self, tmp_path, capsys):
        out = tmp_path / "pole.json"
        code = main(["example", "pole-placement", "--n", "120", "--beta",
                     "1e-4", "--seed", "2", "--mc", "4000", "--nondegenerate",
                     "--sector-sweep", "-0.5", "--out", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "risk upper bound" in text
        doc = json.loads(out.read_text())
        assert doc["problem"] == "pole-placement"
        assert "mc_risk" in doc
        assert len(doc["sector_sweep"]) == 1
        poles = (tmp_path / "pole_poles.csv").read_text().splitlines()
        assert poles[0] == "scenario,re,im"
        assert len(poles) == 1 + 4 * 120

    def test_input_design_small(self, tmp_path, capsys):
        out = tmp_path / "inp.json"
        code = main(["example", "input-design", "--n", "60", "--beta", "1e-7",
                     "--rho", "1", "--grid", "-0.2:0:20", "--mc", "4000",
                     "--seed", "3", "--out", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "envelope confidence" in text
        assert "= 1 - 2.0e-06" in text
        doc = json.loads(out.read_text())
        assert doc["envelope"]["confidence"] == pytest.approx(1 - 20e-7)
        assert doc["mc_cdf_inside_envelope"] is True
        assert (tmp_path / "inp.csv").exists()

    def test_validate_round_trip(self, tmp_path):
        out = tmp_path / "inp.json"
        assert main(["example", "input-design", "--n", "60", "--beta", "1e-7",
                     "--rho", "1", "--grid", "-0.2:0:20", "--seed", "3",
                     "--out", str(out)]) == 0
        assert main(["validate", "--report", str(out), "--mc", "4000",
                     "--seed", "555"]) == 0

    def test_reproducible_outputs(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["example", "input-design", "--n", "40", "--beta", "1e-6",
                "--rho", "0.1", "--grid", "-0.2:0:10", "--seed", "8"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        da = a.read_bytes().replace(b"a.json", b"")
        db = b.read_bytes().replace(b"b.json", b"")
        assert da == db


class TestOutputDirEnv:

    def test_relative_paths_land_in_outdir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SCENARIOCERT_OUTDIR", str(tmp_path))
        assert main(["epsilon", "--n", "10", "--beta", "0.05", "--k", "2",
                     "--out", "inner.json"]) == 0
        assert (tmp_path / "inner.json").exists()


class TestRounding:

    def test_round_floats_significant_digits(self):
        doc = round_floats({"x": 0.123456789012345678, "y": [1e-300, 12345678901234567.0]})
        assert doc["x"] == 0.123456789012
        assert doc["y"][1] == 1.23456789012e16

    def test_round_floats_preserves_types(self):
        doc = round_floats({"i": np.int64(3), "b": np.bool_(True), "s": "x"})
        assert doc == {"i": 3, "b": True, "s": "x"}
        assert isinstance(doc["i"], int) and isinstance(doc["b"], bool)
