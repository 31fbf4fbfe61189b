"""CLI harness: argument handling, payload schema, byte determinism,
file inputs, and output formats."""

import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from matshrink import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, out


def run_json(argv, capsys):
    code, out = run_cli(argv + ["--format", "json"], capsys)
    assert code == 0
    return json.loads(out)


SCHEMA = json.loads(
    (Path(cli.__file__).parent / "output_schema.json").read_text())


def _validate(payload):
    jsonschema.validate(payload, SCHEMA)


class TestRiskCommand:
    def test_diagonal_js_origin(self, capsys):
        payload = run_json(["risk", "--n", "5", "--p", "3",
                            "--estimator", "diagonal-js", "--a", "1",
                            "--scenario", "zero", "--reps", "200000",
                            "--seed", "42"], capsys)
        _validate(payload)
        mean = np.asarray(payload["results"]["risk_mean"]["data"]).reshape(3, 3)
        se = np.asarray(payload["results"]["risk_se"]["data"]).reshape(3, 3)
        assert np.all(np.abs(np.diag(mean) - 2.0) < 4 * np.diag(se))

    def test_mle_risk(self, capsys):
        payload = run_json(["risk", "--n", "4", "--p", "2",
                            "--estimator", "mle", "--reps", "50000"], capsys)
        mean = np.asarray(payload["results"]["risk_mean"]["data"]).reshape(2, 2)
        assert np.allclose(np.diag(mean), 4.0, atol=0.15)

    def test_byte_identical_reruns(self, capsys):
        argv = ["risk", "--n", "4", "--p", "2", "--a", "0.8",
                "--reps", "20000", "--seed", "9"]
        a = run_json(argv, capsys)
        b = run_json(argv, capsys)
        assert cli.canonical_data_bytes(a) == cli.canonical_data_bytes(b)

    def test_thread_count_does_not_change_payload(self, capsys):
        base = ["risk", "--n", "4", "--p", "2", "--reps", "30000"]
        a = run_json(base + ["--threads", "1"], capsys)
        b = run_json(base + ["--threads", "8"], capsys)
        assert cli.canonical_data_bytes(a) == cli.canonical_data_bytes(b)


class TestDominanceCommand:
    def test_dominates_inside_window(self, capsys):
        payload = run_json(["dominance", "--n", "5", "--p", "2",
                            "--a", "0.5", "--reps", "100000"], capsys)
        _validate(payload)
        assert payload["results"]["verdict"] == "DOMINATES"

    def test_fails_outside_window(self, capsys):
        payload = run_json(["dominance", "--n", "6", "--p", "2",
                            "--scenario", "spike", "--kappa", "20",
                            "--a", "1.5", "--reps", "200000"], capsys)
        assert payload["results"]["verdict"] == "FAILS"

    def test_zero_a_inconclusive(self, capsys):
        payload = run_json(["dominance", "--n", "5", "--p", "2",
                            "--a", "0", "--reps", "5000"], capsys)
        res = payload["results"]
        assert res["verdict"] == "INCONCLUSIVE"
        assert all(v == 0.0 for v in res["diff_mean"]["data"])
        assert all(v == 0.0 for v in res["diff_se"]["data"])


class TestSweepCommand:
    def test_csv_table(self, capsys):
        code, out = run_cli(["sweep", "--n", "5", "--p", "2",
                             "--a-grid", "0,0.5,1", "--reps", "20000",
                             "--format", "csv"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == ("a,uniform_value,uniform_se,min_eig,"
                            "projected_se,verdict")
        assert len(lines) == 4
        assert lines[1].endswith("INCONCLUSIVE")

    def test_json_payload(self, capsys):
        payload = run_json(["sweep", "--n", "5", "--p", "2",
                            "--a-grid", "0.5,0.9", "--reps", "50000"], capsys)
        _validate(payload)
        verdicts = [e["verdict"] for e in payload["results"]["entries"]]
        assert verdicts == ["DOMINATES", "DOMINATES"]

    def test_empty_grid_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sweep", "--n", "5", "--p", "2", "--a-grid", "",
                      "--reps", "100"])
        assert exc.value.code == 2
        assert "--a-grid" in capsys.readouterr().err


class TestSteinCheckCommand:
    def test_known_sigma_table(self, capsys):
        payload = run_json(["stein-check", "--n", "5",
                            "--lambda2-grid", "0,4", "--reps", "100000"],
                           capsys)
        _validate(payload)
        rows = payload["results"]["rows"]
        assert [r["lambda2"] for r in rows] == [0.0, 4.0]
        assert all(r["lhs_ok"] and r["rhs_ok"] and r["pair_ok"] for r in rows)
        assert payload["results"]["flagged"] is False

    def test_unknown_sigma_rows(self, capsys):
        payload = run_json(["stein-check", "--n", "5", "--nu", "4",
                            "--lambda2-grid", "0", "--reps", "100000"],
                           capsys)
        rows = payload["results"]["unknown_sigma_rows"]
        assert len(rows) == 1
        assert rows[0]["ok"]

    def test_small_n_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["stein-check", "--n", "2", "--reps", "100"])
        assert exc.value.code == 2
        assert "n >= 3" in capsys.readouterr().err


class TestCounterexampleCommand:
    def test_headline_defaults(self, capsys):
        payload = run_json(["counterexample", "--reps", "200000"], capsys)
        _validate(payload)
        res = payload["results"]
        assert res["predicted"] == pytest.approx(6.06)
        assert res["verdict"] == "FAILS"
        assert res["within_tolerance"] is True
        assert res["mc_value"] > 6.0

    def test_inside_window_direction(self, capsys):
        payload = run_json(["counterexample", "--a", "0.5",
                            "--reps", "200000"], capsys)
        res = payload["results"]
        assert res["verdict"] == "DOMINATES"
        assert res["mc_value"] < 6.0

    def test_boundary_a_shows_no_improvement(self, capsys):
        # a = 2/p: the quadratic equals n exactly; the estimate sits at n
        # up to the dropped O(1/kappa^4) remainder
        payload = run_json(["counterexample", "--a", "1.0",
                            "--reps", "200000"], capsys)
        res = payload["results"]
        assert res["predicted"] == 6.0
        assert res["within_tolerance"] is True
        assert res["verdict"] != "DOMINATES"


class TestOracleTableCommand:
    def test_exact_rows(self, capsys):
        payload = run_json(["oracle-table", "--n", "5",
                            "--lambda2-grid", "0,1,4",
                            "--a-grid", "0,1,2"], capsys)
        _validate(payload)
        rows = payload["results"]["rows"]
        assert rows[0]["a_curve"] == 1.0
        a_vals = [r["a_curve"] for r in rows]
        assert all(x > y for x, y in zip(a_vals, a_vals[1:]))
        first = {r["a"]: r["risk"] for r in rows[0]["risks"]}
        assert first[0.0] == 5.0
        assert first[1.0] == 2.0
        assert first[2.0] == 5.0

    def test_risk_minimized_at_one(self, capsys):
        payload = run_json(["oracle-table", "--n", "6",
                            "--lambda2-grid", "0,9",
                            "--a-grid", "0.5,1,1.5"], capsys)
        for row in payload["results"]["rows"]:
            risks = {r["a"]: r["risk"] for r in row["risks"]}
            assert risks[1.0] < risks[0.5]
            assert risks[1.0] < risks[1.5]


class TestFileInputs:
    def test_sigma_cov_and_whitened(self, tmp_path, capsys):
        cov = tmp_path / "sigma.csv"
        cov.write_text("1.0,0.6\n0.6,1.0\n")
        payload = run_json(["dominance", "--n", "6", "--p", "2",
                            "--estimator", "whitened-js", "--a", "0.9",
                            "--sigma-cov", str(cov), "--reps", "100000"],
                           capsys)
        assert payload["results"]["verdict"] == "DOMINATES"
        assert payload["config"]["model"]["sigma_cov"]["data"] == [1.0, 0.6, 0.6, 1.0]

    def test_theta_star_file(self, tmp_path, capsys):
        star = tmp_path / "star.csv"
        star.write_text("1.0\n0.0\n0.0\n0.0\n0.0\n")
        payload = run_json(["risk", "--n", "5", "--p", "2",
                            "--scenario", "spike", "--kappa", "3",
                            "--theta-star", str(star), "--reps", "5000"],
                           capsys)
        assert payload["config"]["scenario"]["theta_star"] == [1, 0, 0, 0, 0]

    def test_theta_file_scenario(self, tmp_path, capsys):
        theta = tmp_path / "theta.csv"
        theta.write_text("0.5,0.1\n0.2,0.3\n0.0,0.0\n")
        payload = run_json(["risk", "--n", "3", "--p", "2",
                            "--scenario", "file", "--theta-file", str(theta),
                            "--reps", "5000"], capsys)
        assert payload["config"]["scenario"]["kind"] == "custom"

    def test_missing_theta_file_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["risk", "--n", "3", "--p", "2", "--scenario", "file",
                      "--reps", "100"])
        assert exc.value.code == 2
        assert "--theta-file" in capsys.readouterr().err

    def test_out_writes_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, printed = run_cli(["oracle-table", "--n", "4", "--out",
                                 str(out)], capsys)
        assert code == 0
        assert printed == ""
        payload = json.loads(out.read_text())
        _validate(payload)


class TestUsageErrors:
    def test_missing_n(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["risk", "--p", "2", "--reps", "100"])
        assert exc.value.code == 2
        assert "--n" in capsys.readouterr().err

    def test_missing_p(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["risk", "--n", "5", "--reps", "100"])
        assert exc.value.code == 2
        assert "--p" in capsys.readouterr().err

    def test_bad_estimator_choice(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["risk", "--n", "5", "--p", "2",
                      "--estimator", "ridge"])
        assert exc.value.code == 2

    def test_runtime_estimator_failure_exits_one(self, capsys):
        # efron-morris needs n >= p + 2
        code = cli.main(["risk", "--n", "4", "--p", "3",
                         "--estimator", "efron-morris", "--reps", "100"])
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestConfigRoundTrip:
    def test_serialize_parse_serialize_fixed_point(self, capsys):
        payload = run_json(["dominance", "--n", "5", "--p", "2",
                            "--a", "0.7", "--scenario", "spike",
                            "--kappa", "2.5", "--reps", "5000"], capsys)
        cfg_dict = payload["config"]
        rebuilt = cli.ExperimentConfig.from_dict(cfg_dict)
        assert rebuilt.to_dict() == cfg_dict

    def test_rerun_from_parsed_config_reproduces_results(self, capsys):
        payload = run_json(["risk", "--n", "4", "--p", "2",
                            "--reps", "20000", "--seed", "3"], capsys)
        cfg = cli.ExperimentConfig.from_dict(payload["config"])
        rerun = cli.run_command(cfg)
        assert cli.canonical_data_bytes(rerun) == cli.canonical_data_bytes(payload)


class TestTextFormat:
    def test_risk_text(self, capsys):
        code, out = run_cli(["risk", "--n", "4", "--p", "2",
                             "--reps", "5000", "--format", "text"], capsys)
        assert code == 0
        assert "risk mean:" in out

    def test_counterexample_text(self, capsys):
        code, out = run_cli(["counterexample", "--reps", "20000",
                             "--format", "text"], capsys)
        assert code == 0
        assert "verdict" in out
