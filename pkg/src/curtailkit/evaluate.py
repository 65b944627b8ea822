"""Forecast scoring: the load-shifting impact metric and standard error metrics.

The impact metric answers the operational question: a flexible device must
run for ``c`` minutes somewhere inside a window of length ``w`` starting at
``t``. Using the forecast, it runs during the k = c/resolution steps the
forecast ranks best; the impact is the mean *actual* curtailment over those
steps. That is compared against immediate usage (first k steps), random-time
usage (equal to the whole-window mean), and the oracle / anti-oracle bounds
obtained by selecting directly on the actuals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    ActualGaps,
    CTooLarge,
    EmptyInput,
    NoOverlap,
    OffGrid,
    OutOfRange,
    ResolutionMismatch,
    UnitMismatch,
    WindowNotCovered,
)
from .forecast import BacktestEntry, BacktestResult, ForecastSeries
from .timeseries import Series, Unit, align, format_rfc3339, window


class Direction(Enum):
    """How forecast values rank the steps to use.

    Curtailment-valued forecasts want the largest values; price-like
    forecasts want the smallest (low LMP means curtailment is likely).
    """

    SELECT_MAX_VALUE = "select_max_value"
    SELECT_MIN_VALUE = "select_min_value"


#: Representative flexibility windows (seconds) for common device classes.
DEVICE_WINDOW_PRESETS: dict[str, int] = {
    "smart_thermostat": 3600,
    "residential_ev": 8 * 3600,
    "grid_battery": 86400,
    "deferrable_batch": 7 * 86400,
}


@dataclass(frozen=True)
class LoadShiftSpec:
    """A (t, w, c) load-shifting evaluation window.

    ``t`` may be None for specs evaluated relative to each forecast's window
    start in :func:`sweep`. ``direction=None`` infers the ranking direction
    from the forecast unit. ``contiguous=True`` restricts the selection to a
    single uninterrupted block for devices that cannot pause.
    """

    t: int | None
    w: int
    c: int
    direction: Direction | None = None
    contiguous: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.c <= self.w:
            raise ValueError(f"need 0 < c <= w, got c={self.c} w={self.w}")


@dataclass(frozen=True, eq=False)
class ImpactReport:
    """Impact of one forecast-guided load shift plus its baselines and bounds."""

    window_start: int
    w: int
    c: int
    direction: Direction
    contiguous: bool
    forecast_impact: float
    immediate_baseline: float
    random_baseline: float
    oracle_impact: float
    anti_oracle_impact: float
    selected_steps: np.ndarray
    unit: Unit
    forecast_gap_count: int = 0

    def __post_init__(self) -> None:
        tol = 1e-9 * max(1.0, abs(self.oracle_impact), abs(self.anti_oracle_impact))
        for name, value in (
            ("forecast_impact", self.forecast_impact),
            ("immediate_baseline", self.immediate_baseline),
            ("random_baseline", self.random_baseline),
        ):
            if not (self.anti_oracle_impact - tol <= value <= self.oracle_impact + tol):
                raise ValueError(
                    f"{name}={value} violates [anti_oracle, oracle] = "
                    f"[{self.anti_oracle_impact}, {self.oracle_impact}]"
                )


def _infer_direction(unit: Unit) -> Direction:
    if unit is Unit.USD_PER_MWH:
        return Direction.SELECT_MIN_VALUE
    return Direction.SELECT_MAX_VALUE


def _rank_steps(values: np.ndarray, candidates: np.ndarray, direction: Direction) -> np.ndarray:
    """Candidate indices ordered best-first, ties broken toward earlier steps."""
    key = values[candidates]
    if direction is Direction.SELECT_MAX_VALUE:
        key = -key
    order = np.argsort(key, kind="stable")  # stable: earlier index wins ties
    return candidates[order]


def _best_block(values: np.ndarray, mask: np.ndarray, k: int, maximize: bool) -> np.ndarray:
    """Best length-k contiguous block by mean of ``values``; gap-free blocks only.

    Ties break toward the earliest start.
    """
    n = len(values)
    best_score = None
    best_start = None
    for start in range(n - k + 1):
        if not mask[start : start + k].all():
            continue
        score = values[start : start + k].mean()
        if maximize:
            score = -score
        if best_score is None or score < best_score:
            best_score = score
            best_start = start
    if best_start is None:
        raise CTooLarge(f"no gap-free contiguous block of {k} steps available")
    return np.arange(best_start, best_start + k)


def load_shift_impact(
    forecast: ForecastSeries | Series, actual: Series, spec: LoadShiftSpec
) -> ImpactReport:
    """Score one load-shift window. See the module docstring for the metric.

    The actual series must be gap-free inside the window; forecast gaps are
    excluded from the selection (counted in the report).
    """
    fc_series = forecast.series if isinstance(forecast, ForecastSeries) else forecast
    if spec.t is None:
        raise ValueError("spec.t must be set for direct evaluation (relative specs are for sweep())")
    if fc_series.grid.resolution != actual.grid.resolution:
        raise ResolutionMismatch("forecast and actual series must share a resolution")
    step = fc_series.grid.resolution.seconds
    if spec.w % step != 0 or spec.c % step != 0:
        raise OffGrid(f"w and c must be multiples of the {step}s resolution")
    try:
        fc_win = window(fc_series, spec.t, spec.w)
        ac_win = window(actual, spec.t, spec.w)
    except OutOfRange as exc:
        raise WindowNotCovered(str(exc)) from exc

    n = ac_win.grid.length
    k = spec.c // step
    if k > n:
        raise CTooLarge(f"c selects {k} steps but the window has {n}")
    if not ac_win.mask.all():
        raise ActualGaps(
            f"actuals have {int((~ac_win.mask).sum())} gaps in "
            f"[{format_rfc3339(spec.t)}, +{spec.w}s)"
        )

    direction = spec.direction or _infer_direction(fc_series.unit)
    gap_count = int((~fc_win.mask).sum())
    actual_vals = ac_win.values

    if spec.contiguous:
        selected = _best_block(
            fc_win.values, fc_win.mask, k, maximize=direction is Direction.SELECT_MAX_VALUE
        )
        oracle_sel = _best_block(actual_vals, ac_win.mask, k, maximize=True)
        anti_sel = _best_block(actual_vals, ac_win.mask, k, maximize=False)
        oracle = actual_vals[oracle_sel].mean()
        anti = actual_vals[anti_sel].mean()
    else:
        candidates = np.nonzero(fc_win.mask)[0]
        if len(candidates) < k:
            raise CTooLarge(
                f"forecast has only {len(candidates)} usable steps in the window, need {k}"
            )
        selected = np.sort(_rank_steps(fc_win.values, candidates, direction)[:k])
        ordered = np.sort(actual_vals)
        oracle = ordered[-k:].mean()
        anti = ordered[:k].mean()

    return ImpactReport(
        window_start=spec.t,
        w=spec.w,
        c=spec.c,
        direction=direction,
        contiguous=spec.contiguous,
        forecast_impact=float(actual_vals[selected].mean()),
        immediate_baseline=float(actual_vals[:k].mean()),
        random_baseline=float(actual_vals.mean()),
        oracle_impact=float(oracle),
        anti_oracle_impact=float(anti),
        selected_steps=selected,
        unit=ac_win.unit,
        forecast_gap_count=gap_count,
    )


@dataclass(frozen=True, eq=False)
class ErrorMetrics:
    """Regression (mae/rmse) or classification metrics over non-gap pairs.

    Fields not applicable to the metric family are None; precision/recall/f1
    are also None when their denominator is zero (the 0/0 convention).
    """

    n_pairs: int
    mae: float | None = None
    rmse: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    accuracy: float | None = None
    tp: int | None = None
    fp: int | None = None
    fn: int | None = None
    tn: int | None = None


def _joint_values(forecast: ForecastSeries | Series, actual: Series) -> tuple[np.ndarray, np.ndarray]:
    fc = forecast.series if isinstance(forecast, ForecastSeries) else forecast
    a, b = align(fc, actual)
    joint = a.mask & b.mask
    if not joint.any():
        raise NoOverlap("no jointly observed steps")
    return a.values[joint], b.values[joint]


def regression_metrics(forecast: ForecastSeries | Series, actual: Series) -> ErrorMetrics:
    """MAE and RMSE over jointly observed steps."""
    fc = forecast.series if isinstance(forecast, ForecastSeries) else forecast
    if fc.unit is not actual.unit:
        raise UnitMismatch(f"{fc.unit.value} forecast vs {actual.unit.value} actuals")
    pred, obs = _joint_values(forecast, actual)
    err = pred - obs
    return ErrorMetrics(
        n_pairs=len(err),
        mae=float(np.abs(err).mean()),
        rmse=float(np.sqrt((err**2).mean())),
    )


def classification_metrics(forecast: ForecastSeries | Series, actual: Series) -> ErrorMetrics:
    """Confusion counts and derived rates for boolean01 signals."""
    fc = forecast.series if isinstance(forecast, ForecastSeries) else forecast
    if fc.unit is not Unit.BOOLEAN01 or actual.unit is not Unit.BOOLEAN01:
        raise UnitMismatch("classification metrics need boolean01 signals on both sides")
    pred, obs = _joint_values(forecast, actual)
    pred_b = pred > 0.5
    obs_b = obs > 0.5
    tp = int((pred_b & obs_b).sum())
    fp = int((pred_b & ~obs_b).sum())
    fn = int((~pred_b & obs_b).sum())
    tn = int((~pred_b & ~obs_b).sum())
    total = tp + fp + fn + tn
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    f1 = None
    if precision is not None and recall is not None and (precision + recall) > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return ErrorMetrics(
        n_pairs=total,
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=(tp + tn) / total,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )


@dataclass(frozen=True, eq=False)
class SweepRow:
    """Aggregate impact figures for one spec across backtest windows."""

    spec: LoadShiftSpec
    n_windows: int
    forecast_impact: float
    immediate_baseline: float
    random_baseline: float
    oracle_impact: float
    anti_oracle_impact: float
    uplift_vs_random: float | None
    uplift_vs_immediate: float | None


@dataclass(frozen=True, eq=False)
class SweepReport:
    rows: list[SweepRow]
    reports: list[ImpactReport]
    skipped_windows: int

    def overall(self) -> dict[str, float | None]:
        fc = float(np.mean([r.forecast_impact for r in self.reports]))
        rand = float(np.mean([r.random_baseline for r in self.reports]))
        imm = float(np.mean([r.immediate_baseline for r in self.reports]))
        return {
            "n_windows": len(self.reports),
            "forecast_impact": fc,
            "immediate_baseline": imm,
            "random_baseline": rand,
            "oracle_impact": float(np.mean([r.oracle_impact for r in self.reports])),
            "anti_oracle_impact": float(np.mean([r.anti_oracle_impact for r in self.reports])),
            "uplift_vs_random": fc / rand if rand != 0 else None,
            "uplift_vs_immediate": fc / imm if imm != 0 else None,
        }


def sweep(
    results: BacktestResult | Sequence[BacktestEntry],
    specs: Sequence[LoadShiftSpec],
) -> SweepReport:
    """Evaluate every load-shift spec against every backtest window.

    Specs with ``t=None`` are anchored at each forecast window's start.
    Windows a spec does not fit into are counted as skipped, not fatal.
    """
    entries = results.entries if isinstance(results, BacktestResult) else list(results)
    if not specs:
        raise EmptyInput("no load-shift specs given")
    if not entries:
        raise EmptyInput("no backtest entries given")

    rows: list[SweepRow] = []
    all_reports: list[ImpactReport] = []
    skipped = 0
    for spec in specs:
        reports: list[ImpactReport] = []
        for entry in entries:
            t = spec.t if spec.t is not None else entry.forecast.series.grid.start
            anchored = LoadShiftSpec(
                t=t, w=spec.w, c=spec.c, direction=spec.direction, contiguous=spec.contiguous
            )
            try:
                reports.append(load_shift_impact(entry.forecast, entry.actual, anchored))
            except (WindowNotCovered, CTooLarge, ActualGaps):
                skipped += 1
        if not reports:
            continue
        fc = float(np.mean([r.forecast_impact for r in reports]))
        rand = float(np.mean([r.random_baseline for r in reports]))
        imm = float(np.mean([r.immediate_baseline for r in reports]))
        rows.append(
            SweepRow(
                spec=spec,
                n_windows=len(reports),
                forecast_impact=fc,
                immediate_baseline=imm,
                random_baseline=rand,
                oracle_impact=float(np.mean([r.oracle_impact for r in reports])),
                anti_oracle_impact=float(np.mean([r.anti_oracle_impact for r in reports])),
                uplift_vs_random=fc / rand if rand != 0 else None,
                uplift_vs_immediate=fc / imm if imm != 0 else None,
            )
        )
        all_reports.extend(reports)
    if not all_reports:
        raise EmptyInput("no spec fit any backtest window")
    return SweepReport(rows=rows, reports=all_reports, skipped_windows=skipped)


def write_impact_csv(path, reports: Sequence[ImpactReport]) -> None:
    """Write per-window impact rows:
    ``window_start,w,c,forecast_impact,immediate,random,oracle,anti_oracle``.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("window_start,w,c,forecast_impact,immediate,random,oracle,anti_oracle\n")
        for r in reports:
            fh.write(
                f"{format_rfc3339(r.window_start)},{r.w},{r.c},"
                f"{r.forecast_impact!r},{r.immediate_baseline!r},{r.random_baseline!r},"
                f"{r.oracle_impact!r},{r.anti_oracle_impact!r}\n"
            )


def write_sweep_json(path, report: SweepReport) -> None:
    """JSON summary: per-spec aggregates plus the overall block."""
    payload = {
        "overall": report.overall(),
        "skipped_windows": report.skipped_windows,
        "per_spec": [
            {
                "w": row.spec.w,
                "c": row.spec.c,
                "direction": (row.spec.direction.value if row.spec.direction else "auto"),
                "contiguous": row.spec.contiguous,
                "n_windows": row.n_windows,
                "forecast_impact": row.forecast_impact,
                "immediate_baseline": row.immediate_baseline,
                "random_baseline": row.random_baseline,
                "oracle_impact": row.oracle_impact,
                "anti_oracle_impact": row.anti_oracle_impact,
                "uplift_vs_random": row.uplift_vs_random,
                "uplift_vs_immediate": row.uplift_vs_immediate,
            }
            for row in report.rows
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
