"""Baseline forecasters, signal conversion, and rolling-origin backtesting.

The forecasters here are reference baselines; learned models plug in through
the :class:`Forecaster` interface. The backtest harness enforces the
no-lookahead contract structurally: at each issue time the forecaster is
refit on a history truncated strictly before that time, so nothing observed
at or after the issue instant can influence a prediction.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    AlreadyDiscrete,
    InsufficientHistory,
    NoHistory,
    OffGrid,
    ScheduleOutOfRange,
)
from .detect import bin_signal
from .timeseries import (
    DAY_SECONDS,
    Resolution,
    Series,
    TimeGrid,
    Unit,
    format_rfc3339,
    local_seconds_of_day,
    time_of_day_profile,
)


class SignalType(Enum):
    REGRESSION = "regression"
    BINARY = "binary"
    BINNED = "binned"


@dataclass(frozen=True)
class Horizon:
    """Forecast window: ``lead`` seconds after issue, ``length`` seconds long.

    Defaults to the day-ahead shape most load-shifting decisions need:
    zero lead, 24 hours.
    """

    lead: int = 0
    length: int = DAY_SECONDS

    def __post_init__(self) -> None:
        if self.lead < 0:
            raise ValueError("lead must be >= 0")
        if self.length <= 0:
            raise ValueError("length must be positive")

    def validate_for(self, resolution: Resolution) -> None:
        step = resolution.seconds
        if self.lead % step != 0 or self.length % step != 0:
            raise OffGrid(f"horizon ({self.lead}s lead, {self.length}s) not a multiple of {step}s")

    def grid_for(self, issued_at: int, resolution: Resolution, zone: str) -> TimeGrid:
        return TimeGrid(
            start=issued_at + self.lead,
            length=self.length // resolution.seconds,
            resolution=resolution,
            zone=zone,
        )


@dataclass(frozen=True, eq=False)
class ForecastSeries:
    """A prediction over ``[issued_at + lead, issued_at + lead + length)``.

    The values must be derived only from observations strictly before
    ``issued_at``; the backtest harness enforces this by construction.
    """

    issued_at: int
    horizon: Horizon
    series: Series
    signal_type: SignalType = SignalType.REGRESSION

    def __post_init__(self) -> None:
        grid = self.series.grid
        if grid.start != self.issued_at + self.horizon.lead:
            raise ValueError("forecast grid must start at issued_at + lead")
        if grid.length * grid.resolution.seconds != self.horizon.length:
            raise ValueError("forecast grid span must equal horizon length")


def _check_issue_alignment(history: Series, issued_at: int) -> None:
    step = history.grid.resolution.seconds
    if (issued_at - history.grid.start) % step != 0:
        raise OffGrid(f"issue time {format_rfc3339(issued_at)} not aligned to the {step}s grid")


def persistence(history: Series, issued_at: int, horizon: Horizon = Horizon()) -> ForecastSeries:
    """Predict every horizon step as the last value observed before issue.

    Trailing gaps are skipped; only observations strictly before
    ``issued_at`` are eligible.
    """
    _check_issue_alignment(history, issued_at)
    horizon.validate_for(history.grid.resolution)
    grid = history.grid
    step = grid.resolution.seconds
    n_past = min((issued_at - grid.start) // step, grid.length)
    if n_past <= 0:
        raise NoHistory(f"no observations before {format_rfc3339(issued_at)}")
    past_mask = history.mask[:n_past]
    if not past_mask.any():
        raise NoHistory(f"history before {format_rfc3339(issued_at)} is all gaps")
    last = history.values[:n_past][past_mask][-1]

    out_grid = horizon.grid_for(issued_at, grid.resolution, grid.zone)
    values = np.full(out_grid.length, last)
    fc = Series(grid=out_grid, values=values, unit=history.unit)
    return ForecastSeries(issued_at=issued_at, horizon=horizon, series=fc)


def day_ahead_persistence(
    history: Series, issued_at: int, horizon: Horizon = Horizon()
) -> ForecastSeries:
    """Predict each step as the observation 24 hours earlier, gaps propagating.

    For horizons longer than a day the source time wraps by whole days so it
    always falls in ``[issued_at - 24h, issued_at)`` — never at or after the
    issue instant.
    """
    _check_issue_alignment(history, issued_at)
    horizon.validate_for(history.grid.resolution)
    grid = history.grid
    if grid.start > issued_at - DAY_SECONDS or grid.end < issued_at:
        raise InsufficientHistory(
            f"history must cover the 24h before {format_rfc3339(issued_at)}"
        )
    step = grid.resolution.seconds
    out_grid = horizon.grid_for(issued_at, grid.resolution, grid.zone)
    targets = out_grid.timestamps()
    source = issued_at - DAY_SECONDS + (targets - issued_at) % DAY_SECONDS
    src_idx = (source - grid.start) // step
    values = history.values[src_idx]
    mask = history.mask[src_idx]
    fc = Series(grid=out_grid, values=values, unit=history.unit, mask=mask)
    return ForecastSeries(issued_at=issued_at, horizon=horizon, series=fc)


def climatology(
    history: Series,
    issued_at: int,
    horizon: Horizon = Horizon(),
    bucket: Resolution | None = None,
    zone: str | None = None,
) -> ForecastSeries:
    """Predict each step as the historical median of its local time-of-day bucket.

    The profile is computed from observations strictly before ``issued_at``;
    buckets never observed become gaps in the forecast.
    """
    _check_issue_alignment(history, issued_at)
    horizon.validate_for(history.grid.resolution)
    grid = history.grid
    if bucket is None:
        bucket = grid.resolution
    if zone is None:
        zone = grid.zone
    step = grid.resolution.seconds
    n_past = min((issued_at - grid.start) // step, grid.length)
    if n_past <= 0 or not history.mask[:n_past].any():
        raise NoHistory(f"no observations before {format_rfc3339(issued_at)}")
    training = history.slice_steps(0, int(n_past))
    profile = time_of_day_profile(training, bucket, zone)

    out_grid = horizon.grid_for(issued_at, grid.resolution, grid.zone)
    bucket_idx = local_seconds_of_day(out_grid.timestamps(), zone) // bucket.seconds
    values = profile.median[bucket_idx]
    mask = profile.count[bucket_idx] > 0
    fc = Series(grid=out_grid, values=values, unit=history.unit, mask=mask)
    return ForecastSeries(issued_at=issued_at, horizon=horizon, series=fc)


class Forecaster(ABC):
    """Fit-once, predict-many interface for curtailment/LMP forecasters.

    Implementations must be deterministic given (fitted state, issued_at,
    horizon, seed) and must never read observations at or after the issue
    time they are asked to predict from.
    """

    @abstractmethod
    def fit(self, history: Series) -> "Forecaster":
        """Store immutable state derived from history; returns self."""

    @abstractmethod
    def predict(self, issued_at: int, horizon: Horizon) -> ForecastSeries:
        ...


class PersistenceForecaster(Forecaster):
    def __init__(self) -> None:
        self._history: Series | None = None

    def fit(self, history: Series) -> "PersistenceForecaster":
        self._history = history
        return self

    def predict(self, issued_at: int, horizon: Horizon) -> ForecastSeries:
        if self._history is None:
            raise NoHistory("fit() must be called before predict()")
        return persistence(self._history, issued_at, horizon)


class DayAheadPersistenceForecaster(Forecaster):
    def __init__(self) -> None:
        self._history: Series | None = None

    def fit(self, history: Series) -> "DayAheadPersistenceForecaster":
        self._history = history
        return self

    def predict(self, issued_at: int, horizon: Horizon) -> ForecastSeries:
        if self._history is None:
            raise NoHistory("fit() must be called before predict()")
        return day_ahead_persistence(self._history, issued_at, horizon)


class ClimatologyForecaster(Forecaster):
    def __init__(self, bucket: Resolution | None = None, zone: str | None = None) -> None:
        self.bucket = bucket
        self.zone = zone
        self._history: Series | None = None

    def fit(self, history: Series) -> "ClimatologyForecaster":
        self._history = history
        return self

    def predict(self, issued_at: int, horizon: Horizon) -> ForecastSeries:
        if self._history is None:
            raise NoHistory("fit() must be called before predict()")
        return climatology(self._history, issued_at, horizon, self.bucket, self.zone)


#: Baseline forecasters by CLI/config name.
BASELINES: dict[str, type[Forecaster]] = {
    "persistence": PersistenceForecaster,
    "day_ahead_persistence": DayAheadPersistenceForecaster,
    "climatology": ClimatologyForecaster,
}


def to_signal(
    forecast: ForecastSeries,
    threshold: float | None = None,
    edges: np.ndarray | None = None,
) -> ForecastSeries:
    """Convert a regression forecast to a binary or binned signal.

    Threshold mode flags predicted values at or below the threshold (the
    detection convention); edges mode applies left-closed binning. Exactly
    one of ``threshold``/``edges`` must be given.
    """
    if forecast.signal_type is not SignalType.REGRESSION:
        raise AlreadyDiscrete(f"forecast is already {forecast.signal_type.value}")
    if (threshold is None) == (edges is None):
        raise ValueError("give exactly one of threshold or edges")
    src = forecast.series
    if threshold is not None:
        values = (src.values <= threshold).astype(np.float64)
        out = Series(grid=src.grid, values=values, unit=Unit.BOOLEAN01, mask=src.mask)
        signal_type = SignalType.BINARY
    else:
        out = bin_signal(src, np.asarray(edges, dtype=np.float64)).series
        signal_type = SignalType.BINNED
    return ForecastSeries(
        issued_at=forecast.issued_at,
        horizon=forecast.horizon,
        series=out,
        signal_type=signal_type,
    )


@dataclass(frozen=True, eq=False)
class BacktestEntry:
    issued_at: int
    forecast: ForecastSeries
    actual: Series


@dataclass(frozen=True, eq=False)
class BacktestResult:
    entries: list[BacktestEntry]
    skipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def warning_count(self) -> int:
        return len(self.skipped)


def backtest(
    forecaster: Forecaster,
    series: Series,
    issue_schedule: Sequence[int],
    horizon: Horizon = Horizon(),
) -> BacktestResult:
    """Rolling-origin backtest pairing each forecast with its actual window.

    At each issue time the forecaster is refit on the strictly-prior slice of
    the series, making lookahead impossible by construction. Issues whose
    preconditions fail (e.g. no history at the series start) are skipped and
    reported, not fatal.
    """
    schedule = list(issue_schedule)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("issue schedule must be strictly ascending")
    horizon.validate_for(series.grid.resolution)
    grid = series.grid
    step = grid.resolution.seconds

    entries: list[BacktestEntry] = []
    skipped: list[tuple[int, str]] = []
    for issued_at in schedule:
        if (issued_at - grid.start) % step != 0:
            raise ScheduleOutOfRange(f"issue time {format_rfc3339(issued_at)} off grid")
        win_start = issued_at + horizon.lead
        win_end = win_start + horizon.length
        if win_start < grid.start or win_end > grid.end:
            raise ScheduleOutOfRange(
                f"horizon window for {format_rfc3339(issued_at)} not covered by the series"
            )
        n_past = (issued_at - grid.start) // step
        if n_past <= 0:
            skipped.append((issued_at, "NoHistory: issue at or before series start"))
            continue
        truncated = series.slice_steps(0, int(n_past))
        try:
            forecast = forecaster.fit(truncated).predict(issued_at, horizon)
        except (NoHistory, InsufficientHistory) as exc:
            skipped.append((issued_at, f"{type(exc).__name__}: {exc}"))
            continue
        i0 = (win_start - grid.start) // step
        actual = series.slice_steps(int(i0), int(i0 + horizon.length // step))
        entries.append(BacktestEntry(issued_at=issued_at, forecast=forecast, actual=actual))
    return BacktestResult(entries=entries, skipped=skipped)


def write_forecast_csv(path, entries: Sequence[ForecastSeries]) -> None:
    """Dump forecasts as ``issued_at,target_time,value,signal_type`` rows.

    Gap predictions are emitted with an empty value field.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("issued_at,target_time,value,signal_type\n")
        for fc in entries:
            issued = format_rfc3339(fc.issued_at)
            ts = fc.series.grid.timestamps()
            for i in range(len(ts)):
                val = repr(float(fc.series.values[i])) if fc.series.mask[i] else ""
                fh.write(f"{issued},{format_rfc3339(int(ts[i]))},{val},{fc.signal_type.value}\n")
