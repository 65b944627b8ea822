"""Command-line surface tying ingestion, calibration, detection, backtesting,
and evaluation into reproducible pipelines.

Subcommands: ingest, summarize, calibrate, detect, forecast, backtest,
evaluate, plot. Shared flags (--config/--seed/--out/--iso/--from/--to) are
accepted both before and after the subcommand; command-line flags override
config-file values. The ``CURTAILKIT_DATA`` environment variable supplies the
default catalog root. Commands emit plot *data* (tidy CSV); rendering is left
to external tools.

Every command is deterministic given (inputs, config, seed): repeated runs
produce byte-identical output files. Exit status is 0 iff no error-class
condition occurred (warnings are allowed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import evaluate as evaluate_mod
from . import forecast as forecast_mod
from . import ingest as ingest_mod
from .detect import (
    ThresholdResult,
    below_threshold_heatmap,
    calibration_curve,
    detect as detect_series,
    extract_threshold,
    min_lmp_series,
    seconds_to_hms,
    write_curve_csv,
    write_heatmap_csv,
)
from .errors import (
    ConfigError,
    CurtailkitError,
    EmptyOverlap,
    FlagOnlyIso,
    MissingData,
    UnknownKind,
)
from .timeseries import (
    HOURLY,
    Resolution,
    Series,
    Unit,
    align,
    format_rfc3339,
    parse_rfc3339,
    time_of_day_profile,
)

ENV_DATA_ROOT = "CURTAILKIT_DATA"


@dataclass
class ThresholdConfig:
    target: float = 0.5
    bin_lo: float = -50.0
    bin_hi: float = 50.0
    bin_width: float = 1.0
    min_count: int = 30
    amount_level: float = 0.0
    per_node: bool = False
    cumulative: bool = False

    def edges(self) -> np.ndarray:
        n = int(round((self.bin_hi - self.bin_lo) / self.bin_width))
        return self.bin_lo + self.bin_width * np.arange(n + 1)


@dataclass
class RunConfig:
    """Validated run configuration; see README for the config-file key schema."""

    catalog: str | None = None
    iso: str | None = None
    t_from: int | None = None
    t_to: int | None = None
    out: str = "."
    seed: int = 0
    threshold: ThresholdConfig = None  # type: ignore[assignment]
    forecaster: str = "persistence"
    forecaster_bucket: int | None = None
    lead: int = 0
    length: int = 86400
    issue_every: int = 86400
    target: str = "curtailment"
    node: str | None = None
    region: str | None = None
    load_shift: list[dict] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.threshold is None:
            self.threshold = ThresholdConfig()
        if self.load_shift is None:
            self.load_shift = [{"w": 86400, "c": 7200}]


def _load_config_file(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    thr = raw.get("threshold", {})
    fc = raw.get("forecaster", {})
    bt = raw.get("backtest", {})
    return RunConfig(
        catalog=raw.get("catalog"),
        iso=raw.get("iso"),
        t_from=parse_rfc3339(raw["from"]) if raw.get("from") else None,
        t_to=parse_rfc3339(raw["to"]) if raw.get("to") else None,
        out=raw.get("out", "."),
        seed=int(raw.get("seed", 0)),
        threshold=ThresholdConfig(
            target=float(thr.get("target", 0.5)),
            bin_lo=float(thr.get("bin_lo", -50.0)),
            bin_hi=float(thr.get("bin_hi", 50.0)),
            bin_width=float(thr.get("bin_width", 1.0)),
            min_count=int(thr.get("min_count", 30)),
            amount_level=float(thr.get("amount_level", 0.0)),
            per_node=bool(thr.get("per_node", False)),
            cumulative=bool(thr.get("cumulative", False)),
        ),
        forecaster=fc.get("name", "persistence"),
        forecaster_bucket=fc.get("bucket_seconds"),
        lead=int(bt.get("lead", 0)),
        length=int(bt.get("length", 86400)),
        issue_every=int(bt.get("issue_every", 86400)),
        target=bt.get("target", "curtailment"),
        node=bt.get("node"),
        region=bt.get("region"),
        load_shift=list(raw.get("load_shift", [])) or None,
    )


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = _load_config_file(args.config) if getattr(args, "config", None) else RunConfig()
    # Flags win over config-file values; the env var is the last resort
    # for the catalog root.
    overrides = {}
    if getattr(args, "catalog", None):
        overrides["catalog"] = args.catalog
    if getattr(args, "iso", None):
        overrides["iso"] = args.iso
    if getattr(args, "t_from", None):
        overrides["t_from"] = parse_rfc3339(args.t_from)
    if getattr(args, "t_to", None):
        overrides["t_to"] = parse_rfc3339(args.t_to)
    if getattr(args, "out", None):
        overrides["out"] = args.out
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    cfg = replace(cfg, **overrides)
    if cfg.catalog is None:
        cfg.catalog = os.environ.get(ENV_DATA_ROOT)
    return cfg


def _require_catalog(cfg: RunConfig) -> ingest_mod.Catalog:
    if not cfg.catalog:
        raise ConfigError(
            f"no catalog given: use --catalog/--config or set {ENV_DATA_ROOT}"
        )
    return ingest_mod.load_catalog(cfg.catalog)


def _require_iso(cfg: RunConfig) -> ingest_mod.Iso:
    if not cfg.iso:
        raise ConfigError("an ISO must be selected with --iso")
    try:
        return ingest_mod.Iso(cfg.iso.upper())
    except ValueError as exc:
        names = ", ".join(i.value for i in ingest_mod.Iso)
        raise ConfigError(f"unknown ISO {cfg.iso!r}; expected one of {names}") from exc


def _crop(series: Series, t_from: int | None, t_to: int | None) -> Series:
    """Restrict a series to [t_from, t_to), aligned inward to the grid."""
    if t_from is None and t_to is None:
        return series
    grid = series.grid
    step = grid.resolution.seconds
    start = grid.start
    if t_from is not None and t_from > start:
        start = grid.start + -(-(t_from - grid.start) // step) * step
    end = grid.end
    if t_to is not None and t_to < end:
        end = grid.start + (t_to - grid.start) // step * step
    if end <= start:
        raise EmptyOverlap(
            f"series covers [{format_rfc3339(grid.start)}, {format_rfc3339(grid.end)}) "
            "— nothing left after --from/--to"
        )
    i0 = (start - grid.start) // step
    return series.slice_steps(int(i0), int(i0 + (end - start) // step))


def _crop_all(series_map: dict[str, Series], cfg: RunConfig) -> dict[str, Series]:
    return {k: _crop(s, cfg.t_from, cfg.t_to) for k, s in sorted(series_map.items())}


def _sum_regions(series_map: dict[str, Series]) -> Series:
    """System-wide MW series: sum across regions, gap where any region gaps."""
    series_list = list(series_map.values())
    if len(series_list) == 1:
        return series_list[0]
    vals = np.stack([s.values for s in series_list])
    mask = np.stack([s.mask for s in series_list]).all(axis=0)
    total = np.where(mask, np.nan_to_num(vals, nan=0.0).sum(axis=0), np.nan)
    return Series(grid=series_list[0].grid, values=total, unit=Unit.MW, mask=mask)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_caveat(descriptor: ingest_mod.IsoDescriptor) -> None:
    if descriptor.caveat:
        print(f"caveat: {descriptor.caveat}")


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args: argparse.Namespace) -> int:
    iso = _require_iso(cfg)
    descriptor = ingest_mod.descriptor_for(iso)
    out = _out_dir(cfg)
    if not args.lmp and not args.curtailment:
        raise ConfigError("nothing to ingest: give --lmp and/or --curtailment files")
    adapter = ingest_mod.load_adapter_config(args.adapter) if args.adapter else None

    total_rows = 0
    all_errors: list[ingest_mod.RowError] = []
    lmp_csv = out / f"{iso.value.lower()}_lmp.csv"
    lmp_cache = out / f"{iso.value.lower()}_lmp.ckt"
    curt_csv = out / f"{iso.value.lower()}_curtailment.csv"
    curt_cache = out / f"{iso.value.lower()}_curtailment.ckt"

    if args.lmp:
        parts = []
        for raw in args.lmp:
            if not Path(raw).exists():
                raise MissingData(f"input file not found: {raw}")
            path = raw
            converted = None
            if adapter is not None and adapter.kind == "lmp":
                converted = out / f"_converted_{Path(raw).stem}.csv"
                ingest_mod.convert_raw_lmp(raw, adapter, converted)
                path = converted
            errors: list[ingest_mod.RowError] = []
            parts.append(ingest_mod.load_lmp_frame(path, errors=errors))
            if converted is not None:
                converted.unlink()
            for err in errors:
                print(f"{raw}: line {err.line}: {err.message}")
            all_errors.extend(errors)
            total_rows += len(parts[-1][1]) + len(errors)
        nodes = np.concatenate([p[0] for p in parts])
        ts = np.concatenate([p[1] for p in parts])
        prices = np.concatenate([p[2] for p in parts])
        grid = ingest_mod.infer_grid(ts, descriptor.granularity, descriptor.zone)
        lmp_series = ingest_mod.series_from_arrays(nodes, ts, prices, grid, Unit.USD_PER_MWH)
        ingest_mod.write_lmp_csv(lmp_csv, lmp_series)
        ingest_mod.write_canonical(lmp_cache, lmp_series)

    if args.curtailment:
        records: list[ingest_mod.CurtailmentRecord] = []
        for raw in args.curtailment:
            if not Path(raw).exists():
                raise MissingData(f"input file not found: {raw}")
            path = raw
            converted = None
            if adapter is not None and adapter.kind == "curtailment":
                converted = out / f"_converted_{Path(raw).stem}.csv"
                ingest_mod.convert_raw_curtailment(raw, adapter, converted)
                path = converted
            errors = []
            n_before = len(records)
            records.extend(ingest_mod.parse_curtailment(path, descriptor, errors=errors))
            if converted is not None:
                converted.unlink()
            for err in errors:
                print(f"{raw}: line {err.line}: {err.message}")
            all_errors.extend(errors)
            total_rows += (len(records) - n_before) + len(errors)
        ingest_mod.write_curtailment_csv(curt_csv, records)
        ts = np.array([r.timestamp for r in records], dtype=np.int64)
        grid = ingest_mod.infer_grid(ts, descriptor.granularity, descriptor.zone)
        curt_series = ingest_mod.curtailment_to_series(records, grid)
        ingest_mod.write_canonical(curt_cache, curt_series)

    catalog_path = out / ingest_mod.CATALOG_FILENAME
    if catalog_path.exists():
        catalog = ingest_mod.load_catalog(catalog_path)
        datasets = [d for d in catalog.datasets if d.descriptor.iso_id is not iso]
    else:
        datasets = []
    datasets.append(
        ingest_mod.DatasetEntry(
            descriptor=descriptor,
            lmp_files=(lmp_csv,) if args.lmp else (),
            curtailment_files=(curt_csv,) if args.curtailment else (),
            lmp_cache=lmp_cache if args.lmp else None,
            curtailment_cache=curt_cache if args.curtailment else None,
        )
    )
    ingest_mod.save_catalog(ingest_mod.Catalog(root=out, datasets=tuple(datasets)))
    print(f"rows={total_rows} errors={len(all_errors)}")
    return 0


def _pct_time_curtailed(series: Series) -> tuple[float, int]:
    observed = int(series.mask.sum())
    if observed == 0:
        return float("nan"), 0
    curtailed = int((series.values[series.mask] > 0.0).sum())
    return 100.0 * curtailed / observed, observed


def cmd_summarize(cfg: RunConfig, args: argparse.Namespace) -> int:
    catalog = _require_catalog(cfg)
    entries = catalog.datasets
    if cfg.iso:
        entries = (catalog.dataset_for(_require_iso(cfg)),)
    if not entries:
        raise MissingData("catalog is empty")
    for entry in entries:
        d = entry.descriptor
        print(
            f"iso={d.iso_id.value} granularity={d.granularity.seconds}s "
            f"reported_kind={d.reported_kind.value} zone={d.zone}"
        )
        lmp, curt = ingest_mod.load_dataset_series(entry)
        lmp = _crop_all(lmp, cfg) if lmp else lmp
        curt = _crop_all(curt, cfg) if curt else curt
        if lmp:
            first = min(s.grid.start for s in lmp.values())
            last = max(s.grid.end for s in lmp.values())
            gaps = sum(s.gap_count for s in lmp.values())
            print(
                f"  lmp: nodes={len(lmp)} "
                f"coverage={format_rfc3339(first)}..{format_rfc3339(last)} "
                f"gaps={gaps}"
            )
        for region in sorted(curt):
            s = curt[region]
            pct, observed = _pct_time_curtailed(s)
            print(
                f"  curtailment[{region}]: unit={s.unit.value} "
                f"coverage={format_rfc3339(s.grid.start)}..{format_rfc3339(s.grid.end)} "
                f"steps={s.grid.length} observed={observed} "
                f"pct_time_curtailed={pct:.1f}"
            )
        _print_caveat(d)
    return 0


def cmd_calibrate(cfg: RunConfig, args: argparse.Namespace) -> int:
    iso = _require_iso(cfg)
    catalog = _require_catalog(cfg)
    entry = catalog.dataset_for(iso)
    descriptor = entry.descriptor
    if descriptor.payload_kind in (ingest_mod.PayloadKind.FLAG, ingest_mod.PayloadKind.PCT):
        raise FlagOnlyIso(
            f"{iso.value} reports {descriptor.reported_kind.value}; calibration "
            "needs curtailment MW (flag/percent data has no magnitude)"
        )
    thr = cfg.threshold
    if args.target is not None:
        thr = replace(thr, target=args.target)
    if args.per_node:
        thr = replace(thr, per_node=True)

    lmp, curt = ingest_mod.load_dataset_series(entry)
    if not lmp or not curt:
        raise MissingData(f"{iso.value}: calibration needs both LMP and curtailment data")
    lmp = _crop_all(lmp, cfg)
    curtailment = _crop(_sum_regions(curt), cfg.t_from, cfg.t_to)
    out = _out_dir(cfg)

    def calibrate_one(price_series: Series) -> ThresholdResult:
        a, b = align(price_series, curtailment)
        curve = calibration_curve(
            a,
            b,
            amount_level=thr.amount_level,
            bin_edges=thr.edges(),
            min_count=thr.min_count,
            mode="cumulative" if thr.cumulative else "binned",
        )
        return extract_threshold(curve, thr.target)

    if thr.per_node:
        rows = []
        for node in sorted(lmp):
            result = calibrate_one(lmp[node])
            rows.append((node, result.threshold_price, result.saturated))
        path = out / f"{iso.value.lower()}_node_thresholds.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("node_id,threshold,saturated\n")
            for node, price, saturated in rows:
                fh.write(f"{node},{price!r},{str(saturated).lower()}\n")
        print(f"per-node thresholds written to {path}")
    else:
        result = calibrate_one(min_lmp_series(lmp))
        curve_path = out / f"{iso.value.lower()}_curve.csv"
        write_curve_csv(curve_path, result.curve, result)
        threshold_path = out / f"{iso.value.lower()}_threshold.json"
        with open(threshold_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(
                {
                    "iso": iso.value,
                    "target_likelihood": result.target_likelihood,
                    "threshold_price": result.threshold_price,
                    "saturated": result.saturated,
                    "method": result.method,
                    "amount_level": thr.amount_level,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        print(
            f"threshold={result.threshold_price:.4f} target={result.target_likelihood} "
            f"saturated={str(result.saturated).lower()}"
        )
    _print_caveat(descriptor)
    return 0


def _resolve_threshold(args: argparse.Namespace) -> float:
    if args.threshold is not None:
        return args.threshold
    if args.threshold_file:
        with open(args.threshold_file, "r", encoding="utf-8") as fh:
            return float(json.load(fh)["threshold_price"])
    raise ConfigError("give --threshold VALUE or --threshold-file from `calibrate`")


def cmd_detect(cfg: RunConfig, args: argparse.Namespace) -> int:
    iso = _require_iso(cfg)
    catalog = _require_catalog(cfg)
    entry = catalog.dataset_for(iso)
    lmp, _ = ingest_mod.load_dataset_series(entry)
    if not lmp:
        raise MissingData(f"{iso.value}: no LMP data in the catalog")
    lmp = _crop_all(lmp, cfg)
    threshold = _resolve_threshold(args)
    out = _out_dir(cfg)

    signals = {
        node: detect_series(series, threshold, node_id=node).series
        for node, series in sorted(lmp.items())
    }
    cache_path = out / f"{iso.value.lower()}_signals.ckt"
    ingest_mod.write_canonical(cache_path, signals)
    csv_path = out / f"{iso.value.lower()}_signals.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node_id,timestamp_utc,signal\n")
        for node in sorted(signals):
            s = signals[node]
            ts = s.grid.timestamps()
            for i in np.nonzero(s.mask)[0]:
                fh.write(f"{node},{format_rfc3339(int(ts[i]))},{int(s.values[i])}\n")
    flagged = sum(int(s.present_values().sum()) for s in signals.values())
    observed = sum(int(s.mask.sum()) for s in signals.values())
    print(f"threshold={threshold!r} flagged={flagged} observed={observed}")
    _print_caveat(entry.descriptor)
    return 0


def _target_series(cfg: RunConfig, entry: ingest_mod.DatasetEntry) -> Series:
    lmp, curt = ingest_mod.load_dataset_series(entry)
    if cfg.target == "lmp":
        if not lmp:
            raise MissingData("no LMP data in the catalog")
        lmp = _crop_all(lmp, cfg)
        if cfg.node:
            if cfg.node not in lmp:
                raise MissingData(f"node {cfg.node!r} not in the LMP data")
            return lmp[cfg.node]
        return min_lmp_series(lmp)
    if cfg.target == "curtailment":
        if not curt:
            raise MissingData("no curtailment data in the catalog")
        curt = _crop_all(curt, cfg)
        if cfg.region:
            if cfg.region not in curt:
                raise MissingData(f"region {cfg.region!r} not in the curtailment data")
            return curt[cfg.region]
        return next(iter(sorted(curt.items())))[1]
    raise ConfigError(f"unknown forecast target {cfg.target!r} (use lmp or curtailment)")


def _make_forecaster(cfg: RunConfig) -> forecast_mod.Forecaster:
    name = cfg.forecaster
    if name not in forecast_mod.BASELINES:
        raise ConfigError(
            f"unknown forecaster {name!r}; available: {sorted(forecast_mod.BASELINES)}"
        )
    if name == "climatology":
        bucket = Resolution(cfg.forecaster_bucket) if cfg.forecaster_bucket else None
        return forecast_mod.ClimatologyForecaster(bucket=bucket)
    return forecast_mod.BASELINES[name]()


def cmd_forecast(cfg: RunConfig, args: argparse.Namespace) -> int:
    iso = _require_iso(cfg)
    catalog = _require_catalog(cfg)
    if args.node:
        cfg.node = args.node
        cfg.target = "lmp"
    if args.target:
        cfg.target = args.target
    series = _target_series(cfg, catalog.dataset_for(iso))
    issued_at = parse_rfc3339(args.issued_at)
    horizon = forecast_mod.Horizon(lead=args.lead if args.lead is not None else cfg.lead,
                                   length=args.length if args.length is not None else cfg.length)
    forecaster = _make_forecaster(cfg)
    fc = forecaster.fit(series).predict(issued_at, horizon)
    if args.signal_threshold is not None:
        fc = forecast_mod.to_signal(fc, threshold=args.signal_threshold)
    out = _out_dir(cfg)
    path = out / f"{iso.value.lower()}_forecast.csv"
    forecast_mod.write_forecast_csv(path, [fc])
    print(
        f"forecaster={cfg.forecaster} issued_at={format_rfc3339(issued_at)} "
        f"steps={fc.series.grid.length} gaps={fc.series.gap_count} -> {path}"
    )
    return 0


def _issue_schedule(cfg: RunConfig, series: Series, horizon: forecast_mod.Horizon) -> list[int]:
    grid = series.grid
    first = cfg.t_from if cfg.t_from is not None else grid.start + cfg.issue_every
    last = cfg.t_to if cfg.t_to is not None else grid.end
    issues = []
    t = first
    while t + horizon.lead + horizon.length <= min(last, grid.end):
        if t > grid.start:
            issues.append(t)
        t += cfg.issue_every
    return issues


def _run_backtest(cfg: RunConfig, args: argparse.Namespace) -> tuple[
    forecast_mod.BacktestResult, Series, ingest_mod.DatasetEntry
]:
    iso = _require_iso(cfg)
    catalog = _require_catalog(cfg)
    entry = catalog.dataset_for(iso)
    if getattr(args, "target", None):
        cfg.target = args.target
    series = _target_series(cfg, entry)
    horizon = forecast_mod.Horizon(lead=cfg.lead, length=cfg.length)
    schedule = _issue_schedule(cfg, series, horizon)
    if not schedule:
        raise ConfigError("empty issue schedule: series too short for the horizon")
    forecaster = _make_forecaster(cfg)
    result = forecast_mod.backtest(forecaster, series, schedule, horizon)
    return result, series, entry


def _mean_metric(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def cmd_backtest(cfg: RunConfig, args: argparse.Namespace) -> int:
    result, _, entry = _run_backtest(cfg, args)
    out = _out_dir(cfg)
    dump = out / f"{entry.descriptor.iso_id.value.lower()}_backtest_forecasts.csv"
    forecast_mod.write_forecast_csv(dump, [e.forecast for e in result.entries])
    maes, rmses = [], []
    for e in result.entries:
        m = evaluate_mod.regression_metrics(e.forecast, e.actual)
        maes.append(m.mae)
        rmses.append(m.rmse)
    summary = {
        "forecaster": cfg.forecaster,
        "n_windows": len(result.entries),
        "skipped": len(result.skipped),
        "mean_mae": _mean_metric(maes),
        "mean_rmse": _mean_metric(rmses),
    }
    with open(out / "backtest_summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"backtest windows={summary['n_windows']} skipped={summary['skipped']} "
        f"mean_mae={summary['mean_mae']} mean_rmse={summary['mean_rmse']}"
    )
    return 0


def _specs_from_config(cfg: RunConfig) -> list[evaluate_mod.LoadShiftSpec]:
    specs = []
    for raw in cfg.load_shift:
        direction = raw.get("direction")
        specs.append(
            evaluate_mod.LoadShiftSpec(
                t=parse_rfc3339(raw["t"]) if raw.get("t") else None,
                w=int(raw["w"]),
                c=int(raw["c"]),
                direction=evaluate_mod.Direction(direction) if direction else None,
                contiguous=bool(raw.get("contiguous", False)),
            )
        )
    return specs


def cmd_evaluate(cfg: RunConfig, args: argparse.Namespace) -> int:
    result, _, entry = _run_backtest(cfg, args)
    specs = _specs_from_config(cfg)
    report = evaluate_mod.sweep(result, specs)
    out = _out_dir(cfg)
    evaluate_mod.write_impact_csv(out / "impact_windows.csv", report.reports)
    evaluate_mod.write_sweep_json(out / "impact_summary.json", report)
    overall = report.overall()
    print(
        f"windows={overall['n_windows']} forecast_impact={overall['forecast_impact']:.4f} "
        f"random={overall['random_baseline']:.4f} oracle={overall['oracle_impact']:.4f} "
        f"uplift_vs_random={overall['uplift_vs_random']}"
    )
    _print_caveat(entry.descriptor)
    return 0


def cmd_plot(cfg: RunConfig, args: argparse.Namespace) -> int:
    kind = args.kind
    out = _out_dir(cfg)
    if kind == "time_of_day":
        iso = _require_iso(cfg)
        catalog = _require_catalog(cfg)
        entry = catalog.dataset_for(iso)
        _, curt = ingest_mod.load_dataset_series(entry)
        if not curt:
            raise MissingData(f"{iso.value}: no curtailment data to profile")
        series = _crop(_sum_regions(curt) if len(curt) > 1 else next(iter(curt.values())),
                       cfg.t_from, cfg.t_to)
        bucket = Resolution(args.bucket) if args.bucket else HOURLY
        profile = time_of_day_profile(series, bucket, entry.descriptor.zone)
        path = out / "plot_time_of_day.csv"
        starts = profile.bucket_starts()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("bucket_start_local,median,q25,q75,count\n")
            for b in range(profile.n_buckets):
                if profile.count[b]:
                    row = (
                        f"{seconds_to_hms(int(starts[b]))},"
                        f"{float(profile.median[b])!r},{float(profile.q25[b])!r},"
                        f"{float(profile.q75[b])!r},{int(profile.count[b])}"
                    )
                else:
                    row = f"{seconds_to_hms(int(starts[b]))},,,,0"
                fh.write(row + "\n")
        print(f"wrote {path}")
        return 0
    if kind == "calibration":
        if not args.curve:
            raise ConfigError("plot calibration needs --curve FILE (from `calibrate`)")
        src = Path(args.curve)
        if not src.exists():
            raise MissingData(f"curve file not found: {src}")
        text = src.read_text(encoding="utf-8")
        if not text.startswith("bin_lo,bin_hi,count,freq,fitted_freq"):
            raise ConfigError(f"{src} is not a calibration curve CSV")
        path = out / "plot_calibration.csv"
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}")
        return 0
    if kind == "heatmap":
        iso = _require_iso(cfg)
        catalog = _require_catalog(cfg)
        entry = catalog.dataset_for(iso)
        lmp, _ = ingest_mod.load_dataset_series(entry)
        if not lmp:
            raise MissingData(f"{iso.value}: no LMP data in the catalog")
        lmp = _crop_all(lmp, cfg)
        threshold = _resolve_threshold(args)
        bucket = Resolution(args.bucket) if args.bucket else HOURLY
        stats = below_threshold_heatmap(lmp, threshold, bucket, entry.descriptor.zone)
        path = out / "plot_heatmap.csv"
        write_heatmap_csv(path, stats)
        print(f"wrote {path}")
        return 0
    if kind == "timeseries":
        iso = _require_iso(cfg)
        catalog = _require_catalog(cfg)
        entry = catalog.dataset_for(iso)
        lmp, curt = ingest_mod.load_dataset_series(entry)
        selected: dict[str, Series] = {}
        if args.series:
            for selector in args.series:
                group, _, name = selector.partition(":")
                pool = lmp if group == "lmp" else curt if group == "curtailment" else None
                if pool is None or name not in pool:
                    raise MissingData(f"unknown series {selector!r} (use lmp:NODE or curtailment:REGION)")
                selected[selector] = pool[name]
        else:
            selected = {f"curtailment:{k}": v for k, v in sorted(curt.items())}
        if not selected:
            raise MissingData("no series selected")
        path = out / "plot_timeseries.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("series_id,timestamp_utc,value\n")
            for sid in sorted(selected):
                s = _crop(selected[sid], cfg.t_from, cfg.t_to)
                ts = s.grid.timestamps()
                for i in np.nonzero(s.mask)[0]:
                    fh.write(f"{sid},{format_rfc3339(int(ts[i]))},{float(s.values[i])!r}\n")
        print(f"wrote {path}")
        return 0
    raise UnknownKind(f"unknown plot kind {kind!r}; expected time_of_day, calibration, heatmap, or timeseries")


# -- argument parsing ---------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, *, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run-config file")
    parser.add_argument("--seed", type=int, default=default, help="seed for stochastic choices")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--iso", default=default, help="ISO to operate on (e.g. SPP, CAISO)")
    parser.add_argument("--catalog", default=default, help="catalog directory or catalog.json")
    parser.add_argument("--from", dest="t_from", default=default, metavar="RFC3339",
                        help="start of the date range (inclusive)")
    parser.add_argument("--to", dest="t_to", default=default, metavar="RFC3339",
                        help="end of the date range (exclusive)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curtailkit",
        description="Curtailment detection, forecasting, and load-shift evaluation from LMP data.",
    )
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert/validate raw files into canonical CSV + cache")
    _add_common(p, suppress=True)
    p.add_argument("--lmp", nargs="+", default=None, help="LMP input files")
    p.add_argument("--curtailment", nargs="+", default=None, help="curtailment input files")
    p.add_argument("--adapter", default=None, help="adapter config JSON for raw (non-canonical) files")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("summarize", help="dataset coverage and share of time with curtailment")
    _add_common(p, suppress=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("calibrate", help="calibration curve and threshold extraction")
    _add_common(p, suppress=True)
    p.add_argument("--target", type=float, default=None, help="target curtailment likelihood (0,1)")
    p.add_argument("--per-node", action="store_true", help="calibrate each node separately")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("detect", help="boolean curtailment signals from a price threshold")
    _add_common(p, suppress=True)
    p.add_argument("--threshold", type=float, default=None, help="price threshold USD/MWh")
    p.add_argument("--threshold-file", default=None, help="threshold JSON from `calibrate`")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("forecast", help="issue a single baseline forecast")
    _add_common(p, suppress=True)
    p.add_argument("--issued-at", required=True, metavar="RFC3339")
    p.add_argument("--target", choices=("lmp", "curtailment"), default=None)
    p.add_argument("--node", default=None, help="forecast this node's LMP")
    p.add_argument("--lead", type=int, default=None, help="horizon lead seconds")
    p.add_argument("--length", type=int, default=None, help="horizon length seconds")
    p.add_argument("--signal-threshold", type=float, default=None,
                   help="also convert to a binary signal at this value")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("backtest", help="rolling-origin backtest of a baseline forecaster")
    _add_common(p, suppress=True)
    p.add_argument("--target", choices=("lmp", "curtailment"), default=None)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("evaluate", help="backtest + load-shift impact reports")
    _add_common(p, suppress=True)
    p.add_argument("--target", choices=("lmp", "curtailment"), default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="emit tidy plot-data CSVs")
    _add_common(p, suppress=True)
    p.add_argument("kind", help="time_of_day | calibration | heatmap | timeseries")
    p.add_argument("--bucket", type=int, default=None, help="bucket width seconds (default 3600)")
    p.add_argument("--curve", default=None, help="curve CSV (for kind=calibration)")
    p.add_argument("--threshold", type=float, default=None, help="price threshold (for kind=heatmap)")
    p.add_argument("--threshold-file", default=None, help="threshold JSON (for kind=heatmap)")
    p.add_argument("--series", nargs="+", default=None,
                   help="series selectors like lmp:NODE_001 curtailment:SPP (for kind=timeseries)")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return args.func(cfg, args)
    except CurtailkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
