"""Uniform time grids, gap-aware series, resampling, alignment, windowing,
and time-of-day quantile aggregation.

Conventions shared by the whole package:

* Timestamps are integer Unix epoch seconds, always UTC. IANA time zones
  enter only when values are bucketed by local time of day.
* Gaps are represented by an explicit presence mask, never by sentinel
  values (prices can legitimately be zero or negative). Where the mask is
  False the value array holds NaN so accidental reads poison results.
* Quantiles use linear interpolation between order statistics (numpy's
  default "linear" method), so profile outputs are reproducible.
* Everything here is immutable after construction and safe to share across
  threads; all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from functools import lru_cache
from typing import Iterable
from zoneinfo import ZoneInfo

import numpy as np

from .errors import (
    BadBucket,
    EmptyOverlap,
    NonIntegerRatio,
    OffGrid,
    OutOfRange,
    ResolutionMismatch,
    UpsampleRequested,
)

DAY_SECONDS = 86400


def parse_rfc3339(stamp: str) -> int:
    """Parse an RFC 3339 timestamp with explicit offset to epoch seconds."""
    s = stamp.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp lacks a UTC offset: {stamp!r}")
    return int(dt.timestamp())


def format_rfc3339(t: int) -> str:
    """Format epoch seconds as canonical RFC 3339 UTC (trailing Z)."""
    return datetime.fromtimestamp(int(t), timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class Unit(Enum):
    """Physical unit of a series.

    BIN_INDEX is used by binned detection signals (small non-negative
    integers, one per bin).
    """

    USD_PER_MWH = "usd_per_mwh"
    MW = "mw"
    FRACTION = "fraction"
    BOOLEAN01 = "boolean01"
    BIN_INDEX = "bin_index"


@dataclass(frozen=True)
class Resolution:
    """Step width of a uniform grid, in seconds.

    Any divisor of a day is usable internally; ingest additionally restricts
    descriptors to the resolutions ISOs actually publish (5-minute, hourly).
    """

    seconds: int

    def __post_init__(self) -> None:
        if self.seconds <= 0 or DAY_SECONDS % self.seconds != 0:
            raise ValueError(f"resolution must divide 86400: {self.seconds}")


FIVE_MIN = Resolution(300)
HOURLY = Resolution(3600)

#: The only resolutions accepted when building ISO dataset descriptors.
INGEST_RESOLUTIONS = (FIVE_MIN, HOURLY)


@dataclass(frozen=True)
class TimeGrid:
    """A uniform, contiguous time grid.

    ``start`` is epoch seconds aligned to the resolution; ``zone`` is an IANA
    name used only for local time-of-day bucketing, never for storage.
    """

    start: int
    length: int
    resolution: Resolution
    zone: str = "UTC"

    def __post_init__(self) -> None:
        if self.start % self.resolution.seconds != 0:
            raise ValueError(f"grid start {self.start} not aligned to {self.resolution.seconds}s")
        if self.length < 1:
            raise ValueError("grid length must be >= 1")
        if self.zone != "UTC":
            ZoneInfo(self.zone)  # raises for unknown zones

    @property
    def end(self) -> int:
        """Exclusive end timestamp."""
        return self.start + self.length * self.resolution.seconds

    def timestamps(self) -> np.ndarray:
        return self.start + self.resolution.seconds * np.arange(self.length, dtype=np.int64)

    def index_of(self, t: int) -> int:
        """Index of timestamp ``t``, raising OffGrid/OutOfRange as needed."""
        step = self.resolution.seconds
        if (t - self.start) % step != 0:
            raise OffGrid(f"{format_rfc3339(t)} is not on a {step}s grid starting {format_rfc3339(self.start)}")
        idx = (t - self.start) // step
        if not 0 <= idx < self.length:
            raise OutOfRange(f"{format_rfc3339(t)} outside grid [{format_rfc3339(self.start)}, {format_rfc3339(self.end)})")
        return int(idx)

    def subgrid(self, offset: int, length: int) -> TimeGrid:
        return TimeGrid(
            start=self.start + offset * self.resolution.seconds,
            length=length,
            resolution=self.resolution,
            zone=self.zone,
        )


@dataclass(frozen=True, eq=False)
class Series:
    """Values on a :class:`TimeGrid` with explicit gaps.

    ``values`` is float64 with NaN at gap positions; ``mask`` is True where a
    value is present. Construct with a plain list (None entries become gaps),
    a NaN-carrying array, or an explicit mask.
    """

    grid: TimeGrid
    values: np.ndarray
    unit: Unit
    mask: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) != self.grid.length:
            raise ValueError(f"values length {values.shape} != grid length {self.grid.length}")
        if self.mask is None:
            mask = ~np.isnan(values)
        else:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != values.shape:
                raise ValueError("mask shape must match values")
        values = np.where(mask, values, np.nan)
        present = values[mask]
        if not np.all(np.isfinite(present)):
            raise ValueError("present values must be finite")
        if self.unit is Unit.BOOLEAN01 and present.size and not np.all(np.isin(present, (0.0, 1.0))):
            raise ValueError("boolean01 values must be 0 or 1")
        if self.unit is Unit.FRACTION and present.size and (present.min() < 0.0 or present.max() > 1.0):
            raise ValueError("fraction values must lie in [0, 1]")
        if self.unit is Unit.BIN_INDEX and present.size and (
            present.min() < 0.0 or not np.all(present == np.floor(present))
        ):
            raise ValueError("bin indices must be non-negative integers")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.unit is other.unit
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def __len__(self) -> int:
        return self.grid.length

    @property
    def gap_count(self) -> int:
        return int((~self.mask).sum())

    def present_values(self) -> np.ndarray:
        return self.values[self.mask]

    def slice_steps(self, i0: int, i1: int) -> Series:
        """Positional slice onto a subgrid (internal helper)."""
        return Series(
            grid=self.grid.subgrid(i0, i1 - i0),
            values=self.values[i0:i1],
            unit=self.unit,
            mask=self.mask[i0:i1],
        )


@dataclass(frozen=True, eq=False)
class TimeOfDayProfile:
    """Per-bucket median and interquartile band of a series by local time of day."""

    bucket_width: Resolution
    zone: str
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    count: np.ndarray

    def __post_init__(self) -> None:
        n = DAY_SECONDS // self.bucket_width.seconds
        for arr in (self.median, self.q25, self.q75, self.count):
            if len(arr) != n:
                raise ValueError(f"profile arrays must have {n} buckets")
        have = self.count >= 1
        if np.any(self.q25[have] > self.median[have]) or np.any(self.median[have] > self.q75[have]):
            raise ValueError("quantile ordering violated: need q25 <= median <= q75")

    @property
    def n_buckets(self) -> int:
        return DAY_SECONDS // self.bucket_width.seconds

    def bucket_starts(self) -> np.ndarray:
        """Bucket start offsets as local seconds-of-day."""
        return self.bucket_width.seconds * np.arange(self.n_buckets, dtype=np.int64)


@lru_cache(maxsize=65536)
def _uniform_day_offset(zone: str, day: int) -> int | None:
    """UTC offset (seconds) if constant over the given UTC day, else None."""
    tz = ZoneInfo(zone)
    first = datetime.fromtimestamp(day * DAY_SECONDS, tz).utcoffset()
    last = datetime.fromtimestamp((day + 1) * DAY_SECONDS - 1, tz).utcoffset()
    if first == last:
        return int(first.total_seconds())
    return None


def local_seconds_of_day(ts: np.ndarray | Iterable[int], zone: str) -> np.ndarray:
    """Map epoch seconds to local wall-clock seconds-of-day.

    DST is resolved by the wall clock: both UTC instants of a repeated
    autumn hour map into the same local bucket, and the skipped spring hour
    receives nothing.
    """
    ts = np.asarray(ts, dtype=np.int64)
    if zone == "UTC":
        return ts % DAY_SECONDS
    tz = ZoneInfo(zone)
    days = ts // DAY_SECONDS
    uniq, inverse = np.unique(days, return_inverse=True)
    offsets = np.zeros(len(uniq), dtype=np.int64)
    transition_days = []
    for j, day in enumerate(uniq):
        off = _uniform_day_offset(zone, int(day))
        if off is None:
            transition_days.append(j)
        else:
            offsets[j] = off
    out = (ts + offsets[inverse]) % DAY_SECONDS
    for j in transition_days:
        for i in np.nonzero(inverse == j)[0]:
            dt = datetime.fromtimestamp(int(ts[i]), tz)
            out[i] = dt.hour * 3600 + dt.minute * 60 + dt.second
    return out


_RESAMPLE_MODES = ("mean", "sum", "min", "max")


def resample(series: Series, target: Resolution, mode: str, *, gap_tolerance: float = 0.0) -> Series:
    """Downsample a series to a coarser resolution.

    Each output step aggregates the source steps it covers. An output step
    is a gap iff more than ``gap_tolerance`` (fraction, default 0: strict)
    of its inputs are gaps; with a nonzero tolerance the aggregate is taken
    over the present inputs only. Output steps are aligned to the target
    resolution and only fully covered windows are emitted.
    """
    if mode not in _RESAMPLE_MODES:
        raise ValueError(f"mode must be one of {_RESAMPLE_MODES}")
    src = series.grid.resolution.seconds
    if target.seconds < src:
        raise UpsampleRequested(f"target {target.seconds}s finer than source {src}s")
    if target.seconds % src != 0:
        raise NonIntegerRatio(f"{target.seconds}s is not a multiple of {src}s")
    ratio = target.seconds // src
    if ratio == 1:
        return series

    grid = series.grid
    first_out = -(-grid.start // target.seconds) * target.seconds  # ceil to target alignment
    offset = (first_out - grid.start) // src
    n_out = (grid.end - first_out) // target.seconds
    if n_out < 1:
        raise EmptyOverlap("series span contains no complete target window")

    vals = series.values[offset : offset + n_out * ratio].reshape(n_out, ratio)
    mask = series.mask[offset : offset + n_out * ratio].reshape(n_out, ratio)
    present_counts = mask.sum(axis=1)
    gaps_in = ratio - present_counts
    out_present = gaps_in <= gap_tolerance * ratio

    unit = series.unit
    if mode == "mean":
        sums = np.where(mask, vals, 0.0).sum(axis=1)
        with np.errstate(invalid="ignore"):
            agg = sums / present_counts
        if unit is Unit.BOOLEAN01:
            unit = Unit.FRACTION  # a mean of flags is an occupancy fraction
    elif mode == "sum":
        if unit in (Unit.BOOLEAN01, Unit.FRACTION, Unit.BIN_INDEX):
            raise ValueError(f"sum is not meaningful for {unit.value} series")
        agg = np.where(mask, vals, 0.0).sum(axis=1)
    elif mode == "min":
        agg = np.where(mask, vals, np.inf).min(axis=1)
    else:
        agg = np.where(mask, vals, -np.inf).max(axis=1)

    agg = np.where(out_present, agg, np.nan)
    out_grid = TimeGrid(start=first_out, length=int(n_out), resolution=target, zone=grid.zone)
    return Series(grid=out_grid, values=agg, unit=unit, mask=out_present)


def align(a: Series, b: Series) -> tuple[Series, Series]:
    """Crop two equal-resolution series to their overlapping span.

    Each output keeps its own grid zone; start/length/resolution are shared.
    """
    if a.grid.resolution != b.grid.resolution:
        raise ResolutionMismatch(
            f"{a.grid.resolution.seconds}s vs {b.grid.resolution.seconds}s"
        )
    if a.grid == b.grid:
        return a, b
    start = max(a.grid.start, b.grid.start)
    end = min(a.grid.end, b.grid.end)
    if end <= start:
        raise EmptyOverlap("series do not overlap")
    step = a.grid.resolution.seconds
    ia = (start - a.grid.start) // step
    ib = (start - b.grid.start) // step
    n = (end - start) // step
    return a.slice_steps(int(ia), int(ia + n)), b.slice_steps(int(ib), int(ib + n))


def window(series: Series, t: int, w: int) -> Series:
    """The ``w / resolution`` steps starting at on-grid timestamp ``t``."""
    step = series.grid.resolution.seconds
    if w <= 0 or w % step != 0:
        raise OffGrid(f"window length {w}s is not a positive multiple of {step}s")
    i0 = series.grid.index_of(t)
    n = w // step
    if i0 + n > series.grid.length:
        raise OutOfRange(
            f"window [{format_rfc3339(t)}, +{w}s) extends past grid end {format_rfc3339(series.grid.end)}"
        )
    return series.slice_steps(i0, i0 + n)


def time_of_day_profile(
    series: Series, bucket: Resolution, zone: str | None = None
) -> TimeOfDayProfile:
    """Median/q25/q75 of the series grouped by local time-of-day bucket.

    Gaps are excluded; an empty bucket reports count 0 and NaN quantiles.
    """
    step = series.grid.resolution.seconds
    if bucket.seconds < step or bucket.seconds % step != 0:
        raise BadBucket(f"bucket {bucket.seconds}s incompatible with resolution {step}s")
    if zone is None:
        zone = series.grid.zone
    n_buckets = DAY_SECONDS // bucket.seconds

    ts = series.grid.timestamps()[series.mask]
    vals = series.values[series.mask]
    bucket_idx = local_seconds_of_day(ts, zone) // bucket.seconds

    median = np.full(n_buckets, np.nan)
    q25 = np.full(n_buckets, np.nan)
    q75 = np.full(n_buckets, np.nan)
    count = np.zeros(n_buckets, dtype=np.int64)

    order = np.argsort(bucket_idx, kind="stable")
    sorted_idx = bucket_idx[order]
    sorted_vals = vals[order]
    boundaries = np.searchsorted(sorted_idx, np.arange(n_buckets + 1))
    for b in range(n_buckets):
        lo, hi = boundaries[b], boundaries[b + 1]
        if hi > lo:
            group = sorted_vals[lo:hi]
            q25[b], median[b], q75[b] = np.quantile(group, (0.25, 0.5, 0.75))
            count[b] = hi - lo

    return TimeOfDayProfile(
        bucket_width=bucket, zone=zone, median=median, q25=q25, q75=q75, count=count
    )
