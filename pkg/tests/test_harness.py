"""Experiment configs, result tables and the command-line entry point."""

import json

import pandas as pd
import pytest

import main
from commsearch.asymptotic import joint_gain
from commsearch.errors import ConfigError
from commsearch.harness import ExperimentConfig, ExperimentKind, SwitchingMode, emit_switching_curve, run
from commsearch.policies import ScaledCosts


class TestExperimentConfig:
    def test_defaults_and_types(self):
        typed = ExperimentConfig(ExperimentKind.ASYMPTOTIC_HEATMAP, {"c_s": "0.5:1.5:3", "c_c": "1,2"}).validate()
        assert typed.parameters == {"c_s": [0.5, 1.0, 1.5], "c_c": [1.0, 2.0], "gain": False, "progress": False}

    def test_file_with_overrides(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("# solve one cell\nkind = AsymptoticSolve\nc_s = 1\nc_c = 2  # expensive messages\n")
        config = ExperimentConfig.from_file(path, overrides={"c_c": "3"})
        assert config.kind is ExperimentKind.ASYMPTOTIC_SOLVE
        assert config.validate().parameters["c_c"] == [3.0]

    @pytest.mark.parametrize("kind,params,key", [
        (ExperimentKind.ASYMPTOTIC_HEATMAP, {"c_c": "1"}, "c_s"),
        (ExperimentKind.ASYMPTOTIC_HEATMAP, {"c_s": "1", "c_c": "-1"}, "c_c"),
        (ExperimentKind.ASYMPTOTIC_HEATMAP, {"c_s": "1", "c_c": "1", "colour": "red"}, "colour"),
        (ExperimentKind.SIMULATE, {"dim": "10", "kappa": "0", "n": "1", "replications": "10"}, "replications"),
        (ExperimentKind.SIMULATE, {"dim": "3", "kappa": "0", "n": "1"}, "dim"),
        (ExperimentKind.SIMULATE, {"dim": "10", "kappa": "0", "n": "1.5"}, "n"),
        (ExperimentKind.WEIGHTED_SOLVE, {"mu": "1", "d1": "10", "d2": "10", "lambda_s": "0.1",
                                         "lambda_1c": "0.1", "lambda_2c": "0.1"}, "mu"),
        (ExperimentKind.GAP_SWEEP, {"c_s": "1", "c_c": "1", "dims": "10", "mode": "Both"}, "mode"),
        (ExperimentKind.SWITCHING_CURVE, {"c_s": "2,1"}, "c_s"),
    ])
    def test_errors_name_the_key(self, kind, params, key):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig(kind, params).validate()
        assert info.value.key == key

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("kind = Nonsense\n")
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_file(path)
        assert info.value.key == "kind"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(tmp_path / "absent.cfg", kind=ExperimentKind.TILTED_SOLVE)


class TestRun:
    def test_heatmap_rows(self):
        table = run(ExperimentConfig(ExperimentKind.ASYMPTOTIC_HEATMAP, {"c_s": "1,2", "c_c": "0.5,3"}))
        assert table.header == ["c_s", "c_c", "rho_star", "alpha_star", "value", "regime"]
        assert [(r[0], r[1]) for r in table.rows] == [(1.0, 0.5), (1.0, 3.0), (2.0, 0.5), (2.0, 3.0)]
        assert table.rows[1][5] == "SearchOnly"
        assert table.metadata["kind"] == "AsymptoticHeatmap"

    def test_heatmap_gain_columns(self):
        table = run(ExperimentConfig(ExperimentKind.ASYMPTOTIC_HEATMAP, {"c_s": "1", "c_c": "0.5,3", "gain": "true"}))
        rows = [dict(zip(table.header, r)) for r in table.rows]
        assert [r["joint_gain"] for r in rows] == [joint_gain(ScaledCosts(1.0, 0.5)), joint_gain(ScaledCosts(1.0, 3.0))]
        assert rows[0]["joint_gain"] > 0.0 and rows[1]["joint_gain"] == 0.0

    def test_tilted_compare_agrees_in_search_only_region(self):
        table = run(ExperimentConfig(ExperimentKind.TILTED_COMPARE, {"c_s": "1", "c_c": "2"}))
        row = dict(zip(table.header, table.rows[0]))
        assert row["posterior_regime"] == "SearchOnly" and row["tilted_regime"] == "PureSearch"
        assert row["tilted_value"] == pytest.approx(row["posterior_value"], abs=1e-12)
        assert row["improvement"] == pytest.approx(0.0, abs=1e-12)

    def test_solve_with_mapping(self):
        table = run(ExperimentConfig(ExperimentKind.ASYMPTOTIC_SOLVE, {"c_s": "1", "c_c": "2", "dim": "20"}))
        row = dict(zip(table.header, table.rows[0]))
        assert row["kappa"] == 0.0
        assert row["n"] >= 1

    def test_weighted_has_combined_row(self):
        table = run(ExperimentConfig(ExperimentKind.WEIGHTED_SOLVE, {
            "mu": "0.7", "d1": "20", "d2": "20", "lambda_s": "0.05", "lambda_1c": "0.01", "lambda_2c": "0.5"}))
        assert [r[0] for r in table.rows] == ["1", "2", "combined"]
        first, second, combined = table.rows
        assert combined[6] == pytest.approx(0.49 * first[6] + 0.51 * second[6], abs=1e-12)

    def test_simulate_small(self):
        table = run(ExperimentConfig(ExperimentKind.SIMULATE, {
            "dim": "8", "kappa": "0,4", "n": "1,3", "replications": "200", "seed": "5", "max_n": "8"}))
        assert len(table.rows) == 4
        assert table.metadata["seed"] == 5

    def test_gap_sweep_rows(self):
        table = run(ExperimentConfig(ExperimentKind.GAP_SWEEP, {
            "c_s": "1", "c_c": "0.5", "dims": "8,10", "replications": "200", "max_n": "64"}))
        rows = [dict(zip(table.header, r)) for r in table.rows]
        assert [r["d"] for r in rows] == [8, 10]
        assert all(r["gap"] >= 0.0 and r["mode"] == "Joint" for r in rows)

    def test_finite_sweep_rows(self):
        table = run(ExperimentConfig(ExperimentKind.FINITE_SWEEP, {
            "c_s": "1", "c_c": "0.5,3", "dims": "6", "replications": "100", "max_n": "16"}))
        assert [r[2] for r in table.rows] == [0.5, 3.0]


class TestResultTable:
    def test_write_and_reload(self, tmp_path):
        config = ExperimentConfig(ExperimentKind.TILTED_SOLVE, {"c_s": "0.5,2", "c_c": "1"})
        table = run(config)
        csv_path, meta_path = table.write(tmp_path / "out" / "tilted.csv")
        frame = pd.read_csv(csv_path)
        assert list(frame.columns) == table.header
        assert frame["value"].tolist() == pytest.approx([row[5] for row in table.rows], rel=1e-15)

        meta = json.loads(meta_path.read_text())
        assert meta["parameters"]["c_s"] == [0.5, 2.0]
        again = run(ExperimentConfig.from_metadata(meta_path))
        again.write(tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_bytes() == csv_path.read_bytes()

    def test_seeded_simulation_is_byte_identical(self, tmp_path):
        config = ExperimentConfig(ExperimentKind.SIMULATE, {
            "dim": "8", "kappa": "0,4", "n": "1,3", "replications": "200", "seed": "5", "max_n": "8"})
        first, meta_path = run(config).write(tmp_path / "first.csv")
        second, _ = run(config).write(tmp_path / "second.csv")
        assert second.read_bytes() == first.read_bytes()

        replayed, replayed_meta = run(ExperimentConfig.from_metadata(meta_path)).write(tmp_path / "replayed.csv")
        assert replayed.read_bytes() == first.read_bytes()
        assert replayed_meta.read_bytes() == meta_path.read_bytes()

    def test_switching_curve_tilted_is_identity(self):
        table = emit_switching_curve([0.5, 1.0, 3.0], SwitchingMode.TILTED)
        assert [(r[0], r[1]) for r in table.rows] == [(0.5, 0.5), (1.0, 1.0), (3.0, 3.0)]

    def test_switching_curve_requires_sorted_grid(self):
        with pytest.raises(ConfigError):
            emit_switching_curve([2.0, 1.0])


class TestMain:
    def test_success(self, tmp_path, capsys):
        out = tmp_path / "heatmap.csv"
        assert main.main(["heatmap", "--c-s", "1", "--c-c", "2", "--out", str(out), "--quiet"]) == main.EXIT_OK
        assert out.exists() and out.with_suffix(".json").exists()
        assert "Wrote 1 rows" in capsys.readouterr().out

    def test_config_error_record(self, tmp_path, capsys):
        code = main.main(["heatmap", "--c-s", "1", "--c-c", "2", "--set", "colour=red",
                          "--out", str(tmp_path / "x.csv"), "--quiet"])
        assert code == main.EXIT_CONFIG
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["error"] == "ConfigError"
        assert record["context"]["key"] == "colour"

    def test_too_few_replications(self, tmp_path):
        code = main.main(["simulate", "--dim", "8", "--kappa", "0", "--n", "1", "--reps", "10",
                          "--out", str(tmp_path / "x.csv"), "--quiet"])
        assert code == main.EXIT_CONFIG

    def test_numeric_domain_error(self, tmp_path):
        """A set size beyond e^700 cannot be mapped."""
        code = main.main(["solve-joint", "--c-s", "0.01", "--c-c", "5", "--dim", "1000",
                          "--out", str(tmp_path / "x.csv"), "--quiet"])
        assert code == main.EXIT_NUMERIC

    def test_config_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("c_s = 1\nc_c = 0.5\n")
        out = tmp_path / "tilted.csv"
        assert main.main(["solve-tilted", "--config", str(path), "--c-c", "3", "--out", str(out), "--quiet"]) == 0
        assert pd.read_csv(out)["c_c"].tolist() == [3.0]
