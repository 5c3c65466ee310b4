import filecmp
from pathlib import Path

import pytest
import yaml

from dcaim import cli, harness
from dcaim.macsim import SchemeKind
from dcaim.scenario import (
    ScenarioError,
    apply_overrides,
    load_packaged,
    load_scenario,
    parse_override,
)


def config(scn, out, **kwargs):
    defaults = dict(n_frames=30, n_trials=2000, seed=7, out_dir=out)
    defaults.update(kwargs)
    return harness.RunConfig(scenario=scn, **defaults)


class TestScenarioLoading:
    def test_packaged_scenarios_load(self):
        for name in ("reference", "golden"):
            scn = load_packaged(name)
            assert scn.name == name
            assert len(scn.regions) == 3

    def test_missing_file_rejected(self):
        with pytest.raises(ScenarioError):
            load_scenario("/nonexistent/path.yaml")

    def test_bad_schema_version_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        raw = load_packaged("reference").to_dict()
        raw["schema_version"] = 99
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ScenarioError, match="schema_version"):
            load_scenario(path)

    def test_missing_required_key_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        raw = load_packaged("reference").to_dict()
        del raw["area"]
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ScenarioError, match="area"):
            load_scenario(path)


class TestOverrides:
    def test_parse_override_types_values(self):
        assert parse_override("radio.delta_thr_db=6.5") == ("radio.delta_thr_db", 6.5)
        assert parse_override("sim.max_retries=2") == ("sim.max_retries", 2)
        assert parse_override("name=other") == ("name", "other")

    def test_round_trip_through_effective_config(self, tmp_path):
        scn = load_packaged("reference")
        cfg = config(scn, tmp_path, overrides={"radio.delta_thr_db": 4.0}, n_frames=5)
        harness.run_compare(cfg)
        dumped = yaml.safe_load((tmp_path / "effective_config.yaml").read_text())
        assert dumped["scenario"]["radio"]["delta_thr_db"] == 4.0

    def test_unknown_override_path_rejected(self):
        scn = load_packaged("reference")
        with pytest.raises(ScenarioError, match="does not exist"):
            apply_overrides(scn, {"radio.not_a_key": 1})
        with pytest.raises(ScenarioError, match="does not exist"):
            apply_overrides(scn, {"nothing.at.all": 1})

    def test_override_applies_to_nested_list(self):
        scn = load_packaged("reference")
        out = apply_overrides(scn, {"regions.0.name": "front"})
        assert out.regions[0].name == "front"


class TestRunCompare:
    def test_writes_all_artifacts(self, tmp_path):
        result = harness.run_compare(config(load_packaged("reference"), tmp_path, n_frames=10))
        for name in ("energy.csv", "sinr.csv", "schedule.txt", "summary.txt", "effective_config.yaml"):
            assert (tmp_path / name).exists(), name
        assert set(result.traces) == set(SchemeKind)

    def test_rerun_is_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        harness.run_compare(config(load_packaged("reference"), a, n_frames=10))
        harness.run_compare(config(load_packaged("reference"), b, n_frames=10))
        for name in ("energy.csv", "sinr.csv", "schedule.txt", "summary.txt", "effective_config.yaml"):
            assert filecmp.cmp(a / name, b / name, shallow=False), name

    def test_different_seed_changes_outputs(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        harness.run_compare(config(load_packaged("reference"), a, n_frames=10, seed=1))
        harness.run_compare(config(load_packaged("reference"), b, n_frames=10, seed=2))
        assert not filecmp.cmp(a / "energy.csv", b / "energy.csv", shallow=False)


class TestRunLemma1:
    def test_report_and_files(self, tmp_path):
        report = harness.run_lemma1(config(load_packaged("reference"), tmp_path, n_trials=20_000))
        assert (tmp_path / "lemma1.txt").exists()
        lines = (tmp_path / "lemma1.csv").read_text().strip().splitlines()
        assert lines[0] == "scheme,p_out,halfwidth,avg_reuse,n_trials,seed"
        assert len(lines) == 3
        assert report.outage_ordering_holds and report.reuse_ordering_holds


class TestRunGolden:
    def test_passes_and_reports_erratum(self, tmp_path):
        report = harness.run_golden(config(load_packaged("golden"), tmp_path))
        assert report.passed
        text = (tmp_path / "golden_report.txt").read_text()
        assert "result: PASS" in text
        assert any("omits" in note for note in report.notes)

    def test_tampered_threshold_fails(self, tmp_path):
        cfg = config(
            load_packaged("golden"), tmp_path, overrides={"radio.delta_thr_db": 30.0}
        )
        report = harness.run_golden(cfg)
        assert not report.passed


class TestCli:
    def test_golden_exit_zero(self, tmp_path):
        assert cli.main(["golden", "--out", str(tmp_path)]) == 0

    def test_golden_failure_exit_two(self, tmp_path):
        rc = cli.main(
            ["golden", "--out", str(tmp_path), "--set", "radio.delta_thr_db=30.0"]
        )
        assert rc == 2

    def test_unreadable_scenario_exit_one(self, tmp_path):
        rc = cli.main(["compare", "--scenario", "/no/such.yaml", "--out", str(tmp_path)])
        assert rc == 1

    def test_bad_override_exit_one(self, tmp_path):
        rc = cli.main(
            ["compare", "--out", str(tmp_path), "--set", "radio.nope=1", "--frames", "2"]
        )
        assert rc == 1

    def test_compare_and_schedule_run(self, tmp_path):
        assert cli.main(["compare", "--out", str(tmp_path / "c"), "--frames", "5"]) == 0
        assert cli.main(["schedule", "--out", str(tmp_path / "s")]) == 0
        grid = (tmp_path / "s" / "schedule.txt").read_text()
        assert grid.startswith("slot")
        assert (tmp_path / "s" / "schedule.csv").exists()

    def test_lemma1_runs(self, tmp_path):
        assert cli.main(["lemma1", "--out", str(tmp_path), "--trials", "2000"]) == 0
