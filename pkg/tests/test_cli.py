import json

import pytest

from nof1engine.service.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestDecide:
    def test_fixture_prints_validate_set(self, capsys):
        code, out, _ = run_cli(capsys, "decide")
        assert code == 0
        assert "Validate{magnesium, sleep_regularity}" in out

    def test_exit_zero_and_flags_listed(self, capsys):
        code, out, _ = run_cli(capsys, "decide", "--tau-include", "0.25")
        assert code == 0
        assert "sigma[" in out

    def test_unknown_flag_exits_one_with_usage(self, capsys):
        code, out, err = run_cli(capsys, "decide", "--frobnicate")
        assert code == 1
        assert "usage" in err.lower()

    def test_threshold_misordering_is_validation_error(self, capsys):
        code, _, err = run_cli(capsys, "decide", "--tau-include", "0.99")
        assert code == 1
        assert "validation_error" in err


class TestDesign:
    def test_deterministic_output(self, capsys):
        code1, out1, _ = run_cli(capsys, "design", "--arms", "A,B", "--periods", "2", "--seed", "7")
        code2, out2, _ = run_cli(capsys, "design", "--arms", "A,B", "--periods", "2", "--seed", "7")
        assert code1 == code2 == 0
        assert out1 == out2
        assert "baseline" in out1 and "intervention" in out1

    def test_single_arm_is_validation_error(self, capsys):
        code, _, err = run_cli(capsys, "design", "--arms", "A", "--periods", "2")
        assert code == 1
        assert "crossover" in err


class TestRank:
    def test_demo_ranking(self, capsys):
        code, out, _ = run_cli(capsys, "rank", "--seed", "7", "--samples", "20000")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[1].split()[0] == "magnesium"


class TestEngineCommands:
    @pytest.fixture()
    def data_dir(self, tmp_path):
        return str(tmp_path / "engine-data")

    def start(self, capsys, data_dir, periods="2", period_len="2"):
        code, out, _ = run_cli(capsys, "register-patient", "--data-dir", data_dir)
        assert code == 0
        code, out, _ = run_cli(
            capsys,
            "start-trial",
            "--data-dir",
            data_dir,
            "--patient-id",
            "demo-patient",
            "--arms",
            "magnesium,placebo",
            "--periods",
            periods,
            "--period-len",
            period_len,
            "--design-seed",
            "3",
        )
        assert code == 0
        return json.loads(out)

    def test_full_cli_trial_flow(self, capsys, data_dir, tmp_path):
        trial = self.start(capsys, data_dir)
        trial_id = trial["trial_id"]
        last_day = trial["schedule"]["phases"][-1]["end_day"]
        for day in range(1, last_day + 1):
            code, out, _ = run_cli(
                capsys,
                "ingest",
                "--data-dir",
                data_dir,
                "--trial-id",
                trial_id,
                "--day",
                str(day),
                *(["--event"] if day % 2 == 0 else []),
                "--pain",
                "3",
            )
            assert code == 0
        code, out, _ = run_cli(capsys, "posterior", "--data-dir", data_dir, "--trial-id", trial_id)
        assert code == 0
        assert "magnesium" in out and "placebo (reference)" in out

        out_dir = tmp_path / "report-out"
        code, out, _ = run_cli(
            capsys,
            "report",
            "--data-dir",
            data_dir,
            "--trial-id",
            trial_id,
            "--out-dir",
            str(out_dir),
        )
        assert code == 0
        assert (out_dir / "report.json").exists()
        assert (out_dir / "report_arms.tsv").exists()
        assert (out_dir / "report_periods.tsv").exists()
        assert (out_dir / "effect_intervals.png").exists()
        assert (out_dir / "prob_optimal.png").exists()
        periods_header = (out_dir / "report_periods.tsv").read_text().splitlines()[0]
        assert "event_days" in periods_header and "n_observed_days" in periods_header
        header = (out_dir / "report_arms.tsv").read_text().splitlines()[0]
        assert header.split("\t")[0] == "trial_id"

        code, out, _ = run_cli(
            capsys,
            "privacy-contribute",
            "--data-dir",
            data_dir,
            "--patient-id",
            "demo-patient",
            "--trial-id",
            trial_id,
            "--epsilon",
            "1.0",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["contribution"]["intervention_id"] == "magnesium"

    def test_ingest_unknown_trial_exits_one(self, capsys, data_dir):
        code, _, err = run_cli(
            capsys, "ingest", "--data-dir", data_dir, "--trial-id", "none", "--day", "1"
        )
        assert code == 1
        assert "not_found" in err


class TestSimulate:
    def test_generalizability_scenario_with_outputs(self, capsys, tmp_path):
        out_dir = tmp_path / "sim-out"
        code, out, _ = run_cli(
            capsys, "simulate", "--scenario", "generalizability", "--out-dir", str(out_dir)
        )
        assert code == 0
        assert "within" in out
        assert (out_dir / "generalizability.tsv").exists()
        assert (out_dir / "generalizability.json").exists()
        assert (out_dir / "cohort_auc.png").exists()

    def test_case_study_small_run(self, capsys, tmp_path):
        out_dir = tmp_path / "cs-out"
        code, out, _ = run_cli(
            capsys,
            "simulate",
            "--scenario",
            "case_study",
            "--replicates",
            "5",
            "--seed",
            "3",
            "--out-dir",
            str(out_dir),
        )
        assert code == 0
        assert "magnesium" in out
        assert (out_dir / "case_study.tsv").exists()
        assert (out_dir / "case_study_probabilities.png").exists()
        payload = json.loads((out_dir / "case_study.json").read_text())
        assert payload["n_replicates"] == 5

    def test_policy_comparison_small_override(self, capsys, tmp_path):
        override = tmp_path / "override.json"
        override.write_text(
            json.dumps(
                {
                    "population": {
                        "arm_means": {"a": -2.0, "b": -1.0},
                        "heterogeneity_sd": 1.0,
                        "n_patients": 20,
                    },
                    "config": {"sigma_samples": 2000},
                }
            )
        )
        code, out, _ = run_cli(
            capsys,
            "simulate",
            "--scenario",
            "policy_comparison",
            "--config",
            str(override),
            "--seed",
            "1",
        )
        assert code == 0
        assert "hybrid" in out and "oracle" in out

    def test_unknown_scenario_rejected(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "--scenario", "nonsense")
        assert code == 1
