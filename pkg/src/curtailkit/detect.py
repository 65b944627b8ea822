"""Turn nodal LMP into curtailment evidence.

Renewable generators bid at or near zero, so prices at or below a small
threshold are evidence that renewable output is being curtailed. This module
builds the empirical calibration curve (curtailment frequency as a function
of the minimum LMP), extracts a price threshold at a target likelihood via a
monotone fit, and produces per-node boolean/binned detection signals plus
time-of-day heatmap statistics.

All functions are pure over immutable series; per-node work is independent
and may run concurrently without locks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    BadBucket,
    BadEdges,
    EmptyBins,
    EmptySet,
    GridMismatch,
    TooFewBins,
    UnitMismatch,
)
from .timeseries import (
    DAY_SECONDS,
    Resolution,
    Series,
    Unit,
    local_seconds_of_day,
)

DEFAULT_BIN_EDGES = np.arange(-50.0, 51.0, 1.0)
DEFAULT_MIN_COUNT = 30


@dataclass(frozen=True, eq=False)
class CalibrationCurve:
    """Binned empirical curtailment frequency vs. minimum LMP.

    ``frequency`` is NaN for bins whose sample_count is below ``min_count``
    (those bins are reported count-only and excluded from fitting).
    ``amount_level`` is the curtailment magnitude (MW) a step must reach to
    count as a curtailment event; at level <= 0 any positive curtailment
    (or true flag) counts.
    """

    amount_level: float
    bin_edges: np.ndarray
    frequency: np.ndarray
    sample_count: np.ndarray
    event_count: np.ndarray
    min_count: int
    mode: str = "binned"

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def calibrated(self) -> np.ndarray:
        """Boolean mask of bins with enough samples to report a frequency."""
        return self.sample_count >= self.min_count


@dataclass(frozen=True, eq=False)
class ThresholdResult:
    """Price threshold at a target curtailment likelihood.

    ``saturated`` is True when the fitted curve never crosses the target and
    the nearer boundary midpoint was returned instead. ``fitted_frequency``
    holds the monotone (non-increasing) fit over the calibrated bins.
    """

    target_likelihood: float
    threshold_price: float
    method: str
    saturated: bool
    curve: CalibrationCurve
    calibrated_midpoints: np.ndarray
    fitted_frequency: np.ndarray


@dataclass(frozen=True, eq=False)
class DetectionSignal:
    """Boolean or binned curtailment signal for one node."""

    node_id: str | None
    series: Series
    threshold_price: float | None = None
    bin_edges: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class NodeHeatmapStats:
    """Fraction of observed steps with price at or below threshold,
    per node and local time-of-day bucket.

    ``fraction`` is NaN where ``count`` is 0. ``node_total`` is the per-node
    fraction across all buckets.
    """

    node_ids: list[str]
    zone: str
    bucket_width: Resolution
    threshold_price: float
    fraction: np.ndarray  # (n_nodes, n_buckets)
    count: np.ndarray  # (n_nodes, n_buckets)
    node_total: np.ndarray  # (n_nodes,)

    def rows(self) -> Iterable[tuple[str, int, float, int]]:
        """Long-format (node_id, bucket_start_local_seconds, fraction, count)."""
        starts = self.bucket_width.seconds * np.arange(self.fraction.shape[1])
        for i, node in enumerate(self.node_ids):
            for b, start in enumerate(starts):
                yield node, int(start), float(self.fraction[i, b]), int(self.count[i, b])


def _as_node_map(nodal: Mapping[str, Series] | Iterable[Series]) -> dict[str, Series]:
    if isinstance(nodal, Mapping):
        return dict(nodal)
    return {f"node_{i}": s for i, s in enumerate(nodal)}


def _check_shared_grid(series_by_node: dict[str, Series], unit: Unit | None) -> None:
    if not series_by_node:
        raise EmptySet("no nodal series given")
    grids = {s.grid for s in series_by_node.values()}
    if len(grids) != 1:
        raise GridMismatch("nodal series must share one grid")
    if unit is not None:
        bad = [n for n, s in series_by_node.items() if s.unit is not unit]
        if bad:
            raise UnitMismatch(f"expected {unit.value} series, got other units for {bad[:5]}")


def min_lmp_series(nodal: Mapping[str, Series] | Iterable[Series]) -> Series:
    """Per-step minimum price over all nodes with a present value.

    A step is a gap iff every node is a gap there.
    """
    series_by_node = _as_node_map(nodal)
    _check_shared_grid(series_by_node, Unit.USD_PER_MWH)
    all_series = list(series_by_node.values())
    if len(all_series) == 1:
        return all_series[0]
    vals = np.stack([s.values for s in all_series])
    mask = np.stack([s.mask for s in all_series])
    any_present = mask.any(axis=0)
    mins = np.where(mask, vals, np.inf).min(axis=0)
    mins = np.where(any_present, mins, np.nan)
    return Series(grid=all_series[0].grid, values=mins, unit=Unit.USD_PER_MWH, mask=any_present)


def _curtailment_events(curtailment: Series, amount_level: float) -> np.ndarray:
    """Boolean event array: does each present step count as curtailing?

    MW series: value >= amount_level (at level <= 0, any positive MW).
    boolean01 series: a true flag counts regardless of level (flag data
    carries no magnitude to compare against).
    """
    if curtailment.unit is Unit.BOOLEAN01:
        return curtailment.values > 0.0
    if curtailment.unit is not Unit.MW:
        raise UnitMismatch(f"curtailment series must be MW or boolean01, got {curtailment.unit.value}")
    if amount_level > 0.0:
        return curtailment.values >= amount_level
    return curtailment.values > 0.0


def calibration_curve(
    min_lmp: Series,
    curtailment: Series,
    amount_level: float = 0.0,
    bin_edges: np.ndarray | None = None,
    *,
    min_count: int = DEFAULT_MIN_COUNT,
    mode: str = "binned",
) -> CalibrationCurve:
    """Empirical curtailment frequency per minimum-LMP bin.

    ``mode="binned"`` (default) conditions each frequency on the steps whose
    min-LMP falls inside the bin. ``mode="cumulative"`` conditions on all
    steps with min-LMP at or below the bin midpoint, for comparison.
    """
    if mode not in ("binned", "cumulative"):
        raise ValueError(f"unknown calibration mode {mode!r}")
    if min_lmp.grid != curtailment.grid:
        raise GridMismatch("min-LMP and curtailment series must be aligned to one grid")
    edges = np.asarray(DEFAULT_BIN_EDGES if bin_edges is None else bin_edges, dtype=np.float64)
    if len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise BadEdges("bin edges must be >= 2 strictly ascending values")
    n_bins = len(edges) - 1

    joint = min_lmp.mask & curtailment.mask
    x = min_lmp.values[joint]
    events = _curtailment_events(curtailment, amount_level)[joint]

    if mode == "binned":
        bin_idx = np.digitize(x, edges) - 1  # [lo, hi) bins
        in_range = (bin_idx >= 0) & (bin_idx < n_bins) & (x < edges[-1])
        bin_idx = bin_idx[in_range]
        sample_count = np.bincount(bin_idx, minlength=n_bins)
        event_count = np.bincount(bin_idx, weights=events[in_range].astype(np.float64), minlength=n_bins)
        event_count = event_count.astype(np.int64)
    else:
        mids = 0.5 * (edges[:-1] + edges[1:])
        sample_count = np.array([(x <= m).sum() for m in mids], dtype=np.int64)
        event_count = np.array([events[x <= m].sum() for m in mids], dtype=np.int64)

    calibrated = sample_count >= min_count
    if not calibrated.any():
        raise EmptyBins(f"no bin reached min_count={min_count}")
    with np.errstate(invalid="ignore", divide="ignore"):
        frequency = np.where(calibrated, event_count / np.maximum(sample_count, 1), np.nan)

    return CalibrationCurve(
        amount_level=float(amount_level),
        bin_edges=edges,
        frequency=frequency,
        sample_count=sample_count.astype(np.int64),
        event_count=event_count,
        min_count=int(min_count),
        mode=mode,
    )


def _pava_nondecreasing(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares isotonic (non-decreasing) fit, pool-adjacent-violators."""
    vals: list[float] = []
    wts: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(y, w):
        vals.append(float(yi))
        wts.append(float(wi))
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, w2, s2 = vals.pop(), wts.pop(), sizes.pop()
            v1, w1, s1 = vals.pop(), wts.pop(), sizes.pop()
            wt = w1 + w2
            vals.append((v1 * w1 + v2 * w2) / wt)
            wts.append(wt)
            sizes.append(s1 + s2)
    out = np.empty(len(y), dtype=np.float64)
    pos = 0
    for v, s in zip(vals, sizes):
        out[pos : pos + s] = v
        pos += s
    return out


def fit_decreasing(y: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted non-increasing isotonic fit (frequency must not rise with price)."""
    return _pava_nondecreasing(np.asarray(y)[::-1], np.asarray(weights)[::-1])[::-1]


def extract_threshold(curve: CalibrationCurve, target: float) -> ThresholdResult:
    """Price at which the fitted curtailment likelihood crosses ``target``.

    A count-weighted non-increasing isotonic regression over the calibrated
    bin midpoints is interpolated linearly at the target. If the fit never
    crosses the target the nearer boundary midpoint is returned with
    ``saturated=True``.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target likelihood must be in (0, 1), got {target}")
    calibrated = curve.calibrated
    if calibrated.sum() < 2:
        raise TooFewBins(f"need >= 2 calibrated bins, have {int(calibrated.sum())}")
    x = curve.midpoints[calibrated]
    y = curve.frequency[calibrated]
    w = curve.sample_count[calibrated].astype(np.float64)
    fitted = fit_decreasing(y, w)

    saturated = False
    if target >= fitted[0]:
        threshold = float(x[0])
        saturated = target > fitted[0]
    elif target <= fitted[-1]:
        threshold = float(x[-1])
        saturated = target < fitted[-1]
    else:
        threshold = float(x[0])
        for i in range(len(x) - 1):
            hi, lo = fitted[i], fitted[i + 1]
            if hi >= target >= lo:
                if hi == lo:
                    threshold = float(x[i])  # plateau exactly at target: leftmost
                else:
                    frac = (hi - target) / (hi - lo)
                    threshold = float(x[i] + frac * (x[i + 1] - x[i]))
                break

    return ThresholdResult(
        target_likelihood=float(target),
        threshold_price=threshold,
        method="isotonic_interpolated",
        saturated=saturated,
        curve=curve,
        calibrated_midpoints=x,
        fitted_frequency=fitted,
    )


def detect(node_series: Series, threshold: float, node_id: str | None = None) -> DetectionSignal:
    """Boolean signal: 1 where price <= threshold (inclusive), gaps propagate."""
    if node_series.unit is not Unit.USD_PER_MWH:
        raise UnitMismatch(f"detect needs a price series, got {node_series.unit.value}")
    flags = (node_series.values <= threshold).astype(np.float64)
    signal = Series(
        grid=node_series.grid, values=flags, unit=Unit.BOOLEAN01, mask=node_series.mask
    )
    return DetectionSignal(node_id=node_id, series=signal, threshold_price=float(threshold))


def bin_signal(series: Series, edges: np.ndarray, node_id: str | None = None) -> DetectionSignal:
    """Left-closed binned signal: value v maps to bin index ``#edges <= v``.

    ``n`` edges yield ``n + 1`` bins; a single edge at x yields two bins
    split at x (v >= x maps to bin 1 — note this orientation is the inverse
    of ``detect``, which flags v <= threshold).
    """
    edges = np.asarray(edges, dtype=np.float64)
    if edges.size < 1:
        raise BadEdges("need at least one bin edge")
    if edges.size > 1 and np.any(np.diff(edges) <= 0):
        raise BadEdges("bin edges must be strictly ascending")
    idx = np.digitize(series.values, edges, right=False).astype(np.float64)
    signal = Series(
        grid=series.grid,
        values=np.where(series.mask, idx, np.nan),
        unit=Unit.BIN_INDEX,
        mask=series.mask,
    )
    return DetectionSignal(node_id=node_id, series=signal, bin_edges=edges)


def write_curve_csv(path, curve: CalibrationCurve, result: ThresholdResult | None = None) -> None:
    """Write ``bin_lo,bin_hi,count,freq,fitted_freq`` rows for external plotting.

    ``freq`` is empty for under-populated bins; ``fitted_freq`` is filled for
    calibrated bins when a threshold result is supplied.
    """
    fitted_by_bin: dict[int, float] = {}
    if result is not None:
        calibrated_idx = np.nonzero(curve.calibrated)[0]
        fitted_by_bin = {int(i): float(f) for i, f in zip(calibrated_idx, result.fitted_frequency)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bin_lo,bin_hi,count,freq,fitted_freq\n")
        for b in range(len(curve.bin_edges) - 1):
            freq = "" if np.isnan(curve.frequency[b]) else repr(float(curve.frequency[b]))
            fitted = repr(fitted_by_bin[b]) if b in fitted_by_bin else ""
            fh.write(
                f"{float(curve.bin_edges[b])!r},{float(curve.bin_edges[b + 1])!r},"
                f"{int(curve.sample_count[b])},{freq},{fitted}\n"
            )


def seconds_to_hms(seconds: int) -> str:
    h, rem = divmod(int(seconds), 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def write_heatmap_csv(path, stats: "NodeHeatmapStats") -> None:
    """Write ``node_id,bucket_start_local,fraction,count`` long-format rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node_id,bucket_start_local,fraction,count\n")
        for node, start, fraction, count in stats.rows():
            frac = "" if np.isnan(fraction) else repr(fraction)
            fh.write(f"{node},{seconds_to_hms(start)},{frac},{count}\n")


def below_threshold_heatmap(
    nodal: Mapping[str, Series] | Iterable[Series],
    threshold: float,
    bucket: Resolution,
    zone: str | None = None,
) -> NodeHeatmapStats:
    """Per (node, local time-of-day bucket) fraction of steps at or below threshold."""
    series_by_node = _as_node_map(nodal)
    _check_shared_grid(series_by_node, Unit.USD_PER_MWH)
    grid = next(iter(series_by_node.values())).grid
    step = grid.resolution.seconds
    if bucket.seconds < step or bucket.seconds % step != 0:
        raise BadBucket(f"bucket {bucket.seconds}s incompatible with resolution {step}s")
    if zone is None:
        zone = grid.zone
    n_buckets = DAY_SECONDS // bucket.seconds
    bucket_idx = local_seconds_of_day(grid.timestamps(), zone) // bucket.seconds

    node_ids = sorted(series_by_node)
    count = np.zeros((len(node_ids), n_buckets), dtype=np.int64)
    below = np.zeros((len(node_ids), n_buckets), dtype=np.int64)
    node_total = np.full(len(node_ids), np.nan)
    for i, node in enumerate(node_ids):
        s = series_by_node[node]
        present = s.mask
        hit = present & (s.values <= threshold)
        count[i] = np.bincount(bucket_idx[present], minlength=n_buckets)
        below[i] = np.bincount(bucket_idx[hit], minlength=n_buckets)
        n_present = int(present.sum())
        if n_present:
            node_total[i] = hit.sum() / n_present
    with np.errstate(invalid="ignore", divide="ignore"):
        fraction = np.where(count > 0, below / np.maximum(count, 1), np.nan)

    return NodeHeatmapStats(
        node_ids=node_ids,
        zone=zone,
        bucket_width=bucket,
        threshold_price=float(threshold),
        fraction=fraction,
        count=count,
        node_total=node_total,
    )
