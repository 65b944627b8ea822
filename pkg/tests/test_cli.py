import json

import numpy as np
import pytest

from curtailkit import HOURLY, CurtailmentRecord, PayloadKind, Unit
from curtailkit.cli import main
from curtailkit.ingest import (
    load_catalog,
    load_dataset_series,
    write_curtailment_csv,
    write_lmp_csv,
)
from curtailkit.synth import daily_pattern_series, logistic_curtailment_world

from conftest import START


def mw_records(series, region):
    ts = series.grid.timestamps()
    return [
        CurtailmentRecord(region, int(ts[i]), PayloadKind.MW, float(series.values[i]), None)
        for i in np.nonzero(series.mask)[0]
    ]


@pytest.fixture(scope="module")
def spp_raw(tmp_path_factory):
    """Synthetic SPP world with a known $2 threshold, as canonical CSVs."""
    root = tmp_path_factory.mktemp("spp_raw")
    nodal, curtailment = logistic_curtailment_world(
        20_000, seed=11, x0=2.0, scale=1.0, n_nodes=2, start=START
    )
    write_lmp_csv(root / "lmp.csv", nodal)
    write_curtailment_csv(root / "curt.csv", mw_records(curtailment, "SPP"))
    return root


@pytest.fixture(scope="module")
def spp_catalog(spp_raw, tmp_path_factory):
    out = tmp_path_factory.mktemp("spp_catalog")
    rc = main(
        [
            "ingest",
            "--iso",
            "SPP",
            "--out",
            str(out),
            "--lmp",
            str(spp_raw / "lmp.csv"),
            "--curtailment",
            str(spp_raw / "curt.csv"),
        ]
    )
    assert rc == 0
    return out


class TestIngest:
    def test_reports_rows_and_errors(self, spp_raw, tmp_path, capsys):
        rc = main(
            [
                "ingest",
                "--iso",
                "SPP",
                "--out",
                str(tmp_path),
                "--lmp",
                str(spp_raw / "lmp.csv"),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "rows=40000 errors=0" in out

    def test_bad_rows_listed_with_line_numbers(self, tmp_path, capsys):
        lmp = tmp_path / "lmp.csv"
        lmp.write_text(
            "node_id,timestamp_utc,price_usd_per_mwh\n"
            "A,2022-06-01T00:00:00Z,1.0\n"
            "A,2022-06-01T00:05:00Z,oops\n"
            "A,2022-06-01T00:10:00Z,2.0\n",
            encoding="utf-8",
        )
        rc = main(["ingest", "--iso", "SPP", "--out", str(tmp_path / "out"), "--lmp", str(lmp)])
        out = capsys.readouterr().out
        assert rc == 0  # under the error budget
        assert "line 3" in out
        assert "rows=3 errors=1" in out

    def test_missing_input_path(self, tmp_path, capsys):
        rc = main(["ingest", "--iso", "SPP", "--out", str(tmp_path), "--lmp", "no_such.csv"])
        assert rc == 1
        assert "no_such.csv" in capsys.readouterr().err

    def test_schema_error_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n", encoding="utf-8")
        rc = main(["ingest", "--iso", "SPP", "--out", str(tmp_path / "out"), "--lmp", str(bad)])
        assert rc == 1
        assert "header" in capsys.readouterr().err


class TestSummarize:
    def test_matches_direct_computation(self, spp_catalog, capsys):
        rc = main(["summarize", "--catalog", str(spp_catalog), "--iso", "SPP"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "granularity=300s" in out
        assert "reported_kind=system_curtailed_mw" in out

        catalog = load_catalog(spp_catalog)
        _, curt = load_dataset_series(catalog.dataset_for("SPP"))
        series = curt["SPP"]
        expected = 100.0 * (series.values[series.mask] > 0).sum() / series.mask.sum()
        assert f"pct_time_curtailed={expected:.1f}" in out

    def test_missing_iso(self, spp_catalog, capsys):
        rc = main(["summarize", "--catalog", str(spp_catalog), "--iso", "CAISO"])
        assert rc == 1
        assert "CAISO" in capsys.readouterr().err


class TestCalibrate:
    def test_recovers_synthetic_threshold(self, spp_catalog, tmp_path, capsys):
        rc = main(
            [
                "calibrate",
                "--catalog",
                str(spp_catalog),
                "--iso",
                "SPP",
                "--out",
                str(tmp_path),
                "--target",
                "0.5",
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        payload = json.loads((tmp_path / "spp_threshold.json").read_text())
        assert 1.0 <= payload["threshold_price"] <= 3.0  # within one $1 bin of 2.0
        assert "threshold=" in out
        curve_lines = (tmp_path / "spp_curve.csv").read_text().splitlines()
        assert curve_lines[0] == "bin_lo,bin_hi,count,freq,fitted_freq"

    def test_per_node(self, spp_catalog, tmp_path):
        rc = main(
            [
                "calibrate",
                "--catalog",
                str(spp_catalog),
                "--iso",
                "SPP",
                "--out",
                str(tmp_path),
                "--per-node",
            ]
        )
        assert rc == 0
        lines = (tmp_path / "spp_node_thresholds.csv").read_text().splitlines()
        assert lines[0] == "node_id,threshold,saturated"
        assert len(lines) == 3  # two nodes

    def test_flag_only_iso_rejected(self, tmp_path, capsys):
        flags = daily_pattern_series(3, seed=5, resolution=HOURLY, unit=Unit.MW, start=START)
        records = [
            CurtailmentRecord(
                "ISONE", int(t), PayloadKind.FLAG, float(v > 600.0), None
            )
            for t, v in zip(flags.grid.timestamps(), flags.values)
        ]
        raw = tmp_path / "isone.csv"
        write_curtailment_csv(raw, records)
        out = tmp_path / "cat"
        assert main(["ingest", "--iso", "ISONE", "--out", str(out), "--curtailment", str(raw)]) == 0
        capsys.readouterr()
        rc = main(["calibrate", "--catalog", str(out), "--iso", "ISONE"])
        assert rc == 1
        assert "flag" in capsys.readouterr().err.lower()


class TestDetect:
    def test_writes_signals(self, spp_catalog, tmp_path, capsys):
        rc = main(
            [
                "detect",
                "--catalog",
                str(spp_catalog),
                "--iso",
                "SPP",
                "--out",
                str(tmp_path),
                "--threshold",
                "2.0",
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "flagged=" in out
        lines = (tmp_path / "spp_signals.csv").read_text().splitlines()
        assert lines[0] == "node_id,timestamp_utc,signal"
        assert set(line.split(",")[2] for line in lines[1:]) <= {"0", "1"}

    def test_threshold_from_calibrate_file(self, spp_catalog, tmp_path):
        assert (
            main(
                ["calibrate", "--catalog", str(spp_catalog), "--iso", "SPP", "--out", str(tmp_path)]
            )
            == 0
        )
        rc = main(
            [
                "detect",
                "--catalog",
                str(spp_catalog),
                "--iso",
                "SPP",
                "--out",
                str(tmp_path),
                "--threshold-file",
                str(tmp_path / "spp_threshold.json"),
            ]
        )
        assert rc == 0


@pytest.fixture(scope="module")
def nyiso_catalog(tmp_path_factory):
    """Hourly curtailment data with a clean daily pattern, for backtests."""
    root = tmp_path_factory.mktemp("nyiso")
    series = daily_pattern_series(10, seed=3, resolution=HOURLY, noise=40.0, start=START)
    raw = root / "curt.csv"
    write_curtailment_csv(raw, mw_records(series, "NYISO"))
    out = root / "cat"
    assert main(["ingest", "--iso", "NYISO", "--out", str(out), "--curtailment", str(raw)]) == 0
    return out


class TestForecastAndBacktest:
    def test_single_forecast(self, nyiso_catalog, tmp_path, capsys):
        rc = main(
            [
                "forecast",
                "--catalog",
                str(nyiso_catalog),
                "--iso",
                "NYISO",
                "--out",
                str(tmp_path),
                "--issued-at",
                "2022-06-03T00:00:00Z",
            ]
        )
        assert rc == 0
        lines = (tmp_path / "nyiso_forecast.csv").read_text().splitlines()
        assert lines[0] == "issued_at,target_time,value,signal_type"
        assert len(lines) == 25  # 24 hourly predictions

    def test_day_ahead_on_periodic_data_reports_zero_error(self, tmp_path, capsys):
        root = tmp_path / "periodic"
        root.mkdir()
        series = daily_pattern_series(6, seed=0, resolution=HOURLY, noise=0.0, start=START)
        raw = root / "curt.csv"
        write_curtailment_csv(raw, mw_records(series, "NYISO"))
        cat = root / "cat"
        assert main(["ingest", "--iso", "NYISO", "--out", str(cat), "--curtailment", str(raw)]) == 0
        config = tmp_path / "cfg.json"
        config.write_text(
            json.dumps({"iso": "NYISO", "forecaster": {"name": "day_ahead_persistence"}}),
            encoding="utf-8",
        )
        out = tmp_path / "out"
        rc = main(["backtest", "--config", str(config), "--catalog", str(cat), "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "backtest_summary.json").read_text())
        assert summary["n_windows"] > 0
        assert summary["mean_rmse"] == 0.0
        assert summary["mean_mae"] == 0.0

    def test_backtest_summary(self, nyiso_catalog, tmp_path, capsys):
        rc = main(
            [
                "backtest",
                "--catalog",
                str(nyiso_catalog),
                "--iso",
                "NYISO",
                "--out",
                str(tmp_path),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "windows=" in out
        summary = json.loads((tmp_path / "backtest_summary.json").read_text())
        assert summary["n_windows"] > 0
        assert summary["mean_rmse"] >= 0


class TestEvaluate:
    def run_evaluate(self, catalog, out, config):
        return main(
            ["evaluate", "--config", str(config), "--catalog", str(catalog), "--out", str(out)]
        )

    def write_config(self, path, forecaster="climatology"):
        path.write_text(
            json.dumps(
                {
                    "iso": "NYISO",
                    "seed": 7,
                    "forecaster": {"name": forecaster},
                    "backtest": {"length": 86400, "issue_every": 86400},
                    "load_shift": [
                        {"w": 86400, "c": 7200},
                        {"w": 43200, "c": 3600, "contiguous": True},
                    ],
                }
            ),
            encoding="utf-8",
        )
        return path

    def test_reports_written(self, nyiso_catalog, tmp_path, capsys):
        config = self.write_config(tmp_path / "run.json")
        rc = self.run_evaluate(nyiso_catalog, tmp_path / "out", config)
        assert rc == 0
        windows = (tmp_path / "out" / "impact_windows.csv").read_text().splitlines()
        assert windows[0] == "window_start,w,c,forecast_impact,immediate,random,oracle,anti_oracle"
        assert len(windows) > 1
        summary = json.loads((tmp_path / "out" / "impact_summary.json").read_text())
        overall = summary["overall"]
        assert overall["anti_oracle_impact"] <= overall["forecast_impact"] <= overall["oracle_impact"]

    def test_byte_identical_reruns(self, nyiso_catalog, tmp_path):
        config = self.write_config(tmp_path / "run.json")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert self.run_evaluate(nyiso_catalog, out1, config) == 0
        assert self.run_evaluate(nyiso_catalog, out2, config) == 0
        for name in ("impact_windows.csv", "impact_summary.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_perfect_forecaster_hits_oracle(self, nyiso_catalog, tmp_path):
        # Day-ahead persistence on noiseless periodic data == actuals.
        root = tmp_path / "clean"
        root.mkdir()
        series = daily_pattern_series(6, seed=0, resolution=HOURLY, noise=0.0, start=START)
        raw = root / "curt.csv"
        write_curtailment_csv(raw, mw_records(series, "NYISO"))
        cat = root / "cat"
        assert main(["ingest", "--iso", "NYISO", "--out", str(cat), "--curtailment", str(raw)]) == 0
        config = tmp_path / "cfg.json"
        config.write_text(
            json.dumps(
                {
                    "iso": "NYISO",
                    "forecaster": {"name": "day_ahead_persistence"},
                    "backtest": {"length": 86400, "issue_every": 86400},
                    "load_shift": [{"w": 86400, "c": 7200}],
                }
            ),
            encoding="utf-8",
        )
        out = tmp_path / "out"
        assert self.run_evaluate(cat, out, config) == 0
        summary = json.loads((out / "impact_summary.json").read_text())
        overall = summary["overall"]
        assert overall["forecast_impact"] == pytest.approx(overall["oracle_impact"])


class TestPlot:
    def test_time_of_day(self, nyiso_catalog, tmp_path):
        rc = main(
            ["plot", "time_of_day", "--catalog", str(nyiso_catalog), "--iso", "NYISO", "--out", str(tmp_path)]
        )
        assert rc == 0
        lines = (tmp_path / "plot_time_of_day.csv").read_text().splitlines()
        assert lines[0] == "bucket_start_local,median,q25,q75,count"
        assert len(lines) == 25

    def test_constant_series_collapses_quantiles(self, tmp_path):
        root = tmp_path / "const"
        root.mkdir()
        series = daily_pattern_series(3, seed=0, resolution=HOURLY, amplitude=0.0, start=START)
        raw = root / "c.csv"
        write_curtailment_csv(raw, mw_records(series, "NYISO"))
        cat = root / "cat"
        assert main(["ingest", "--iso", "NYISO", "--out", str(cat), "--curtailment", str(raw)]) == 0
        assert main(["plot", "time_of_day", "--catalog", str(cat), "--iso", "NYISO", "--out", str(tmp_path)]) == 0
        for line in (tmp_path / "plot_time_of_day.csv").read_text().splitlines()[1:]:
            _, median, q25, q75, _ = line.split(",")
            assert median == q25 == q75

    def test_calibration_passthrough(self, spp_catalog, tmp_path):
        assert (
            main(["calibrate", "--catalog", str(spp_catalog), "--iso", "SPP", "--out", str(tmp_path)])
            == 0
        )
        rc = main(
            ["plot", "calibration", "--curve", str(tmp_path / "spp_curve.csv"), "--out", str(tmp_path)]
        )
        assert rc == 0
        assert (tmp_path / "plot_calibration.csv").read_text() == (
            tmp_path / "spp_curve.csv"
        ).read_text()

    def test_heatmap(self, spp_catalog, tmp_path):
        rc = main(
            [
                "plot",
                "heatmap",
                "--catalog",
                str(spp_catalog),
                "--iso",
                "SPP",
                "--out",
                str(tmp_path),
                "--threshold",
                "2.0",
            ]
        )
        assert rc == 0
        lines = (tmp_path / "plot_heatmap.csv").read_text().splitlines()
        assert lines[0] == "node_id,bucket_start_local,fraction,count"
        assert len(lines) == 1 + 2 * 24  # two nodes, hourly buckets

    def test_timeseries(self, nyiso_catalog, tmp_path):
        rc = main(
            ["plot", "timeseries", "--catalog", str(nyiso_catalog), "--iso", "NYISO", "--out", str(tmp_path)]
        )
        assert rc == 0
        lines = (tmp_path / "plot_timeseries.csv").read_text().splitlines()
        assert lines[0] == "series_id,timestamp_utc,value"
        assert lines[1].startswith("curtailment:NYISO,")

    def test_unknown_kind(self, capsys):
        rc = main(["plot", "sparkline"])
        assert rc == 1
        assert "unknown plot kind" in capsys.readouterr().err


class TestArgumentSurface:
    @pytest.mark.parametrize(
        "command",
        ["", "ingest", "summarize", "calibrate", "detect", "forecast", "backtest", "evaluate", "plot"],
    )
    def test_help_renders(self, command, capsys):
        argv = ([command] if command else []) + ["--help"]
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 0
        assert "usage: curtailkit" in capsys.readouterr().out

    def test_global_flags_before_subcommand(self, spp_catalog, capsys):
        rc = main(["--catalog", str(spp_catalog), "--iso", "SPP", "summarize"])
        assert rc == 0
        assert "iso=SPP" in capsys.readouterr().out

    def test_flags_after_subcommand_override_before(self, spp_catalog, capsys):
        rc = main(["--iso", "CAISO", "summarize", "--catalog", str(spp_catalog), "--iso", "SPP"])
        assert rc == 0
        assert "iso=SPP" in capsys.readouterr().out


class TestEnvVarCatalog:
    def test_data_root_from_environment(self, spp_catalog, monkeypatch, capsys):
        monkeypatch.setenv("CURTAILKIT_DATA", str(spp_catalog))
        rc = main(["summarize", "--iso", "SPP"])
        assert rc == 0
        assert "iso=SPP" in capsys.readouterr().out

    def test_no_catalog_anywhere(self, monkeypatch, capsys):
        monkeypatch.delenv("CURTAILKIT_DATA", raising=False)
        rc = main(["summarize", "--iso", "SPP"])
        assert rc == 1
        assert "CURTAILKIT_DATA" in capsys.readouterr().err
