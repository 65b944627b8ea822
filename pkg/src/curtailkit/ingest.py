"""Parse ISO market files, normalize them to canonical series, and persist them.

Two interchange formats are defined here:

* Canonical CSVs, one row per observation, for interoperability:
    - LMP:          ``node_id,timestamp_utc,price_usd_per_mwh``
    - curtailment:  ``region_id,timestamp_utc,kind,v1,v2`` with kind in
      {mw, flag, pct, cap_out}; v2 is used only for cap_out.
  Timestamps are RFC 3339 UTC, ``.`` decimals, LF line endings, UTF-8.
* A versioned columnar cache (magic ``CKT1``) holding whole series —
  grid parameters, an explicit gap bitmap, and little-endian float64
  values — for fast repeated scans of multi-year datasets.

Raw ISO-native downloads are converted by per-ISO adapter configs (column
mapping plus time zone) rather than hard-coded parsers.

Parsers are single-pass and single-threaded per file; distinct files may be
parsed concurrently. Canonical readers are safe for concurrent reads.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np
import pandas as pd

from .errors import (
    DuplicateError,
    ErrorBudgetExceeded,
    IoError,
    MissingData,
    OffGridTimestamp,
    SchemaError,
    VersionError,
)
from .timeseries import (
    FIVE_MIN,
    HOURLY,
    INGEST_RESOLUTIONS,
    Resolution,
    Series,
    TimeGrid,
    Unit,
    format_rfc3339,
    parse_rfc3339,
)

LMP_HEADER = ("node_id", "timestamp_utc", "price_usd_per_mwh")
CURTAILMENT_HEADER = ("region_id", "timestamp_utc", "kind", "v1", "v2")

DEFAULT_PRICE_BOUND = 10_000.0
DEFAULT_ERROR_BUDGET = 0.001  # fraction of malformed rows tolerated
# The abort fires only once both thresholds are crossed, so a short fixture
# or an early error cluster in an otherwise-clean file never aborts.
_BUDGET_GRACE_ROWS = 1000
_BUDGET_GRACE_ERRORS = 25

CACHE_MAGIC = b"CKT1"
CACHE_VERSION = 1


class Iso(Enum):
    SPP = "SPP"
    CAISO = "CAISO"
    NYISO = "NYISO"
    PJM = "PJM"
    MISO = "MISO"
    ISONE = "ISONE"
    ERCOT = "ERCOT"
    IESO = "IESO"


class ReportedKind(Enum):
    """What each ISO actually publishes about curtailment."""

    SYSTEM_CURTAILED_MW = "system_curtailed_mw"
    PERCENT_NODES_MARGINAL_FUEL = "percent_nodes_marginal_fuel"
    REGIONAL_MARGINAL_FUEL_FLAG = "regional_marginal_fuel_flag"
    SYSTEM_MARGINAL_FUEL_FLAG = "system_marginal_fuel_flag"
    CAPABILITY_AND_OUTPUT = "capability_and_output"


class PayloadKind(Enum):
    """Canonical curtailment CSV row kinds."""

    MW = "mw"
    FLAG = "flag"
    PCT = "pct"
    CAP_OUT = "cap_out"


_REPORTED_TO_PAYLOAD = {
    ReportedKind.SYSTEM_CURTAILED_MW: PayloadKind.MW,
    ReportedKind.PERCENT_NODES_MARGINAL_FUEL: PayloadKind.PCT,
    ReportedKind.REGIONAL_MARGINAL_FUEL_FLAG: PayloadKind.FLAG,
    ReportedKind.SYSTEM_MARGINAL_FUEL_FLAG: PayloadKind.FLAG,
    ReportedKind.CAPABILITY_AND_OUTPUT: PayloadKind.CAP_OUT,
}

_MISO_CAVEAT = (
    "negative LMPs in MISO can be driven by imports or other transmission "
    "constraints unrelated to curtailment; detection output is a proxy only"
)

# Published reporting characteristics per ISO: (granularity, reported kind,
# default IANA zone for time-of-day views, provenance caveat).
_ISO_FACTS: dict[Iso, tuple[Resolution, ReportedKind, str, str | None]] = {
    Iso.SPP: (FIVE_MIN, ReportedKind.SYSTEM_CURTAILED_MW, "America/Chicago", None),
    Iso.CAISO: (FIVE_MIN, ReportedKind.SYSTEM_CURTAILED_MW, "America/Los_Angeles", None),
    Iso.NYISO: (HOURLY, ReportedKind.SYSTEM_CURTAILED_MW, "America/New_York", None),
    Iso.PJM: (HOURLY, ReportedKind.PERCENT_NODES_MARGINAL_FUEL, "America/New_York", None),
    Iso.MISO: (HOURLY, ReportedKind.REGIONAL_MARGINAL_FUEL_FLAG, "America/Chicago", _MISO_CAVEAT),
    Iso.ISONE: (HOURLY, ReportedKind.SYSTEM_MARGINAL_FUEL_FLAG, "America/New_York", None),
    Iso.ERCOT: (FIVE_MIN, ReportedKind.CAPABILITY_AND_OUTPUT, "America/Chicago", None),
    Iso.IESO: (HOURLY, ReportedKind.CAPABILITY_AND_OUTPUT, "America/Toronto", None),
}


@dataclass(frozen=True)
class IsoDescriptor:
    """Reporting characteristics of one ISO's datasets.

    Granularity and reported kind are pinned to what the ISO publishes;
    constructing a descriptor that contradicts the fact table fails loudly.
    """

    iso_id: Iso
    granularity: Resolution
    reported_kind: ReportedKind
    zone: str
    caveat: str | None = None

    def __post_init__(self) -> None:
        expected_res, expected_kind, _, _ = _ISO_FACTS[self.iso_id]
        if self.granularity not in INGEST_RESOLUTIONS:
            raise ValueError(f"granularity must be one of {[r.seconds for r in INGEST_RESOLUTIONS]}s")
        if self.granularity != expected_res:
            raise ValueError(
                f"{self.iso_id.value} reports at {expected_res.seconds}s, not {self.granularity.seconds}s"
            )
        if self.reported_kind is not expected_kind:
            raise ValueError(
                f"{self.iso_id.value} reports {expected_kind.value}, not {self.reported_kind.value}"
            )

    @property
    def payload_kind(self) -> PayloadKind:
        return _REPORTED_TO_PAYLOAD[self.reported_kind]


def descriptor_for(iso: Iso | str, zone: str | None = None) -> IsoDescriptor:
    """Descriptor with the ISO's published granularity/kind and default zone."""
    iso = Iso(iso) if not isinstance(iso, Iso) else iso
    res, kind, default_zone, caveat = _ISO_FACTS[iso]
    return IsoDescriptor(
        iso_id=iso,
        granularity=res,
        reported_kind=kind,
        zone=zone or default_zone,
        caveat=caveat,
    )


ISO_TABLE: dict[Iso, IsoDescriptor] = {iso: descriptor_for(iso) for iso in Iso}


class LmpRecord(NamedTuple):
    node_id: str
    timestamp: int
    price: float


class CurtailmentRecord(NamedTuple):
    region_id: str
    timestamp: int
    kind: PayloadKind
    v1: float
    v2: float | None

    @property
    def curtailed_mw(self) -> float:
        assert self.kind is PayloadKind.MW
        return self.v1

    @property
    def flag(self) -> bool:
        assert self.kind is PayloadKind.FLAG
        return self.v1 > 0.0

    @property
    def percent_nodes(self) -> float:
        assert self.kind is PayloadKind.PCT
        return self.v1

    @property
    def capability(self) -> float:
        assert self.kind is PayloadKind.CAP_OUT
        return self.v1

    @property
    def output(self) -> float:
        assert self.kind is PayloadKind.CAP_OUT
        assert self.v2 is not None
        return self.v2


@dataclass(frozen=True)
class RowError:
    """One malformed row, reported with its 1-based line number."""

    line: int
    message: str


# Days between 0001-01-01 and the Unix epoch, for fast timestamp parsing.
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


def _fast_utc_timestamp(s: str) -> int:
    """Parse the canonical ``YYYY-MM-DDTHH:MM:SSZ`` form without strptime."""
    if len(s) == 20 and s[10] == "T" and s[19] == "Z":
        days = date(int(s[0:4]), int(s[5:7]), int(s[8:10])).toordinal() - _EPOCH_ORDINAL
        h, m, sec = int(s[11:13]), int(s[14:16]), int(s[17:19])
        if h > 23 or m > 59 or sec > 59:
            raise ValueError(f"invalid time of day in {s!r}")
        return days * 86400 + h * 3600 + m * 60 + sec
    return parse_rfc3339(s)


class _BudgetTracker:
    """Collects RowErrors and aborts once the error fraction exceeds budget."""

    def __init__(self, budget: float, sink: list[RowError] | None):
        self.budget = budget
        self.errors: list[RowError] = sink if sink is not None else []
        self.rows_seen = 0

    def row(self) -> None:
        self.rows_seen += 1

    def error(self, line: int, message: str) -> None:
        self.errors.append(RowError(line=line, message=message))
        if (
            self.rows_seen >= _BUDGET_GRACE_ROWS
            and len(self.errors) >= _BUDGET_GRACE_ERRORS
            and len(self.errors) > self.budget * self.rows_seen
        ):
            raise ErrorBudgetExceeded(
                f"{len(self.errors)} malformed rows in {self.rows_seen} "
                f"(budget {self.budget:.2%}); aborting at line {line}"
            )


def _open_checked(path, expected_header: tuple[str, ...]):
    fh = open(path, "r", encoding="utf-8-sig", newline="")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise SchemaError(f"{path}: empty file, expected header {','.join(expected_header)}")
    if tuple(h.strip() for h in header) != expected_header:
        fh.close()
        raise SchemaError(
            f"{path}: header {','.join(header)!r} != canonical {','.join(expected_header)!r}"
        )
    return fh, reader


def parse_lmp(
    path,
    descriptor: IsoDescriptor | None = None,
    *,
    price_bound: float = DEFAULT_PRICE_BOUND,
    error_budget: float = DEFAULT_ERROR_BUDGET,
    errors: list[RowError] | None = None,
) -> Iterator[LmpRecord]:
    """Stream LmpRecords from a canonical LMP CSV.

    Malformed rows are collected into ``errors`` (line numbers included) and
    skipped; the parse aborts with ErrorBudgetExceeded if more than
    ``error_budget`` of the rows seen so far are bad (after a grace period,
    so small fixtures never abort). ``descriptor`` is accepted for interface
    symmetry and error context; the canonical schema does not vary by ISO.
    """
    del descriptor  # canonical schema is ISO-independent
    tracker = _BudgetTracker(error_budget, errors)
    fh, reader = _open_checked(path, LMP_HEADER)  # SchemaError raised eagerly
    return _lmp_rows(fh, reader, tracker, price_bound)


def _lmp_rows(fh, reader, tracker: _BudgetTracker, price_bound: float) -> Iterator[LmpRecord]:
    with fh:
        for line_no, row in enumerate(reader, start=2):
            tracker.row()
            if len(row) != 3:
                tracker.error(line_no, f"expected 3 fields, got {len(row)}")
                continue
            node_id, stamp, price_text = row
            try:
                ts = _fast_utc_timestamp(stamp)
            except ValueError as exc:
                tracker.error(line_no, f"bad timestamp {stamp!r}: {exc}")
                continue
            try:
                price = float(price_text)
            except ValueError:
                tracker.error(line_no, f"bad price {price_text!r}")
                continue
            if not np.isfinite(price):
                tracker.error(line_no, f"non-finite price {price_text!r}")
                continue
            if abs(price) > price_bound:
                tracker.error(line_no, f"price {price} outside sanity bound +/-{price_bound}")
                continue
            if not node_id:
                tracker.error(line_no, "empty node_id")
                continue
            yield LmpRecord(node_id, ts, price)


_TRUTHY = {"true", "t", "1", "yes"}
_FALSY = {"false", "f", "0", "no"}


def _parse_flag(text: str) -> float:
    lowered = text.strip().lower()
    if lowered in _TRUTHY:
        return 1.0
    if lowered in _FALSY:
        return 0.0
    raise ValueError(f"not a boolean: {text!r}")


def parse_curtailment(
    path,
    descriptor: IsoDescriptor,
    *,
    error_budget: float = DEFAULT_ERROR_BUDGET,
    errors: list[RowError] | None = None,
) -> Iterator[CurtailmentRecord]:
    """Stream CurtailmentRecords from a canonical curtailment CSV.

    Rows whose kind disagrees with the descriptor's reported kind are
    RowErrors — mixing reporting variants in one file means a bad join.
    """
    expected_kind = descriptor.payload_kind
    tracker = _BudgetTracker(error_budget, errors)
    fh, reader = _open_checked(path, CURTAILMENT_HEADER)  # SchemaError raised eagerly
    return _curtailment_rows(fh, reader, tracker, expected_kind, descriptor.iso_id)


def _curtailment_rows(
    fh, reader, tracker: _BudgetTracker, expected_kind: PayloadKind, iso: Iso
) -> Iterator[CurtailmentRecord]:
    with fh:
        for line_no, row in enumerate(reader, start=2):
            tracker.row()
            if len(row) != 5:
                tracker.error(line_no, f"expected 5 fields, got {len(row)}")
                continue
            region_id, stamp, kind_text, v1_text, v2_text = row
            try:
                kind = PayloadKind(kind_text.strip())
            except ValueError:
                tracker.error(line_no, f"unknown kind {kind_text!r}")
                continue
            if kind is not expected_kind:
                tracker.error(
                    line_no,
                    f"kind {kind.value!r} inconsistent with {iso.value} "
                    f"reporting ({expected_kind.value})",
                )
                continue
            try:
                ts = _fast_utc_timestamp(stamp)
            except ValueError as exc:
                tracker.error(line_no, f"bad timestamp {stamp!r}: {exc}")
                continue
            try:
                if kind is PayloadKind.FLAG:
                    v1 = _parse_flag(v1_text)
                else:
                    v1 = float(v1_text)
            except ValueError as exc:
                tracker.error(line_no, f"bad v1 {v1_text!r}: {exc}")
                continue
            v2: float | None = None
            if kind is PayloadKind.CAP_OUT:
                try:
                    v2 = float(v2_text)
                except ValueError:
                    tracker.error(line_no, f"bad v2 {v2_text!r}")
                    continue
            if not _payload_valid(kind, v1, v2):
                tracker.error(line_no, f"payload out of range: kind={kind.value} v1={v1} v2={v2}")
                continue
            yield CurtailmentRecord(region_id, ts, kind, v1, v2)


def _payload_valid(kind: PayloadKind, v1: float, v2: float | None) -> bool:
    if not np.isfinite(v1) or (v2 is not None and not np.isfinite(v2)):
        return False
    if kind is PayloadKind.MW:
        return v1 >= 0.0
    if kind is PayloadKind.PCT:
        return 0.0 <= v1 <= 100.0
    if kind is PayloadKind.CAP_OUT:
        return v1 >= 0.0 and v2 is not None and v2 >= 0.0
    return True  # flag already normalized to {0, 1}


def derive_curtailment_mw(
    record: CurtailmentRecord, *, pct_flag_threshold: float = 0.0
) -> tuple[float, Unit]:
    """Normalize a curtailment payload to (value, unit).

    Capability/output pairs become max(0, capability - output) MW; MW passes
    through; flag and percent variants become a boolean01 proxy (percent
    above ``pct_flag_threshold`` reads as "some curtailment somewhere").
    The result is never negative.
    """
    if record.kind is PayloadKind.MW:
        return record.v1, Unit.MW
    if record.kind is PayloadKind.CAP_OUT:
        return max(0.0, record.v1 - (record.v2 or 0.0)), Unit.MW
    if record.kind is PayloadKind.PCT:
        return (1.0 if record.v1 > pct_flag_threshold else 0.0), Unit.BOOLEAN01
    return (1.0 if record.v1 > 0.0 else 0.0), Unit.BOOLEAN01


def to_series(
    records: Iterable[LmpRecord], grid: TimeGrid, unit: Unit = Unit.USD_PER_MWH
) -> dict[str, Series]:
    """Scatter records onto a shared grid, one Series per node.

    Missing timestamps become gaps; duplicate (node, timestamp) rows and
    timestamps off or outside the grid fail loudly.
    """
    step = grid.resolution.seconds
    per_node: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for rec in records:
        offset = rec.timestamp - grid.start
        if offset % step != 0:
            raise OffGridTimestamp(
                f"{rec.node_id} at {format_rfc3339(rec.timestamp)} not aligned to {step}s grid"
            )
        idx = offset // step
        if not 0 <= idx < grid.length:
            raise OffGridTimestamp(
                f"{rec.node_id} at {format_rfc3339(rec.timestamp)} outside grid "
                f"[{format_rfc3339(grid.start)}, {format_rfc3339(grid.end)})"
            )
        if rec.node_id not in per_node:
            per_node[rec.node_id] = (
                np.full(grid.length, np.nan),
                np.zeros(grid.length, dtype=bool),
            )
        values, mask = per_node[rec.node_id]
        if mask[idx]:
            raise DuplicateError(
                f"duplicate record for {rec.node_id} at {format_rfc3339(rec.timestamp)}"
            )
        values[idx] = rec.price
        mask[idx] = True
    return {
        node: Series(grid=grid, values=values, unit=unit, mask=mask)
        for node, (values, mask) in sorted(per_node.items())
    }


def curtailment_to_series(
    records: Iterable[CurtailmentRecord],
    grid: TimeGrid,
    *,
    pct_flag_threshold: float = 0.0,
) -> dict[str, Series]:
    """Normalize curtailment records per region onto a shared grid.

    Each region's unit comes out as MW or boolean01 depending on the payload
    kind; a region must not mix kinds.
    """
    kinds: dict[str, PayloadKind] = {}
    derived: list[LmpRecord] = []
    units: dict[str, Unit] = {}
    for rec in records:
        if kinds.setdefault(rec.region_id, rec.kind) is not rec.kind:
            raise ValueError(f"region {rec.region_id} mixes payload kinds")
        value, unit = derive_curtailment_mw(rec, pct_flag_threshold=pct_flag_threshold)
        units[rec.region_id] = unit
        derived.append(LmpRecord(rec.region_id, rec.timestamp, value))
    grouped = to_series(derived, grid, unit=Unit.MW)
    out: dict[str, Series] = {}
    for region, series in grouped.items():
        unit = units[region]
        if unit is series.unit:
            out[region] = series
        else:
            out[region] = Series(grid=series.grid, values=series.values, unit=unit, mask=series.mask)
    return out


def infer_grid(timestamps: np.ndarray, resolution: Resolution, zone: str = "UTC") -> TimeGrid:
    """Smallest aligned grid covering all timestamps at the given resolution."""
    ts = np.asarray(timestamps, dtype=np.int64)
    if ts.size == 0:
        raise MissingData("no timestamps to infer a grid from")
    step = resolution.seconds
    if np.any(ts % step != 0):
        bad = int(ts[ts % step != 0][0])
        raise OffGridTimestamp(f"{format_rfc3339(bad)} not aligned to {step}s")
    start = int(ts.min())
    length = int((ts.max() - start) // step) + 1
    return TimeGrid(start=start, length=length, resolution=resolution, zone=zone)


# -- bulk (vectorized) CSV loading -------------------------------------------

def load_lmp_frame(
    path,
    *,
    price_bound: float = DEFAULT_PRICE_BOUND,
    error_budget: float = DEFAULT_ERROR_BUDGET,
    errors: list[RowError] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized canonical-LMP load: (node_ids, epoch_seconds, prices).

    Same contract as :func:`parse_lmp` (RowErrors collected with line
    numbers, budget enforced) at columnar-scan speed.
    """
    sink = errors if errors is not None else []
    try:
        df = pd.read_csv(
            path,
            dtype={"node_id": str},
            na_filter=True,
            engine="c",
            float_precision="round_trip",
        )
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if tuple(df.columns) != LMP_HEADER:
        raise SchemaError(f"{path}: header {tuple(df.columns)} != canonical {LMP_HEADER}")

    stamps = pd.to_datetime(
        df["timestamp_utc"], format="%Y-%m-%dT%H:%M:%S%z", utc=True, errors="coerce"
    )
    prices = pd.to_numeric(df["price_usd_per_mwh"], errors="coerce").to_numpy(dtype=np.float64)
    nodes = df["node_id"].to_numpy(dtype=object)

    bad_ts = stamps.isna().to_numpy()
    bad_price = ~np.isfinite(prices) | (np.abs(prices) > price_bound)
    bad_node = pd.isna(df["node_id"]).to_numpy()
    bad = bad_ts | bad_price | bad_node
    if bad.any():
        for i in np.nonzero(bad)[0]:
            line = int(i) + 2  # header occupies line 1
            if bad_ts[i]:
                msg = f"bad timestamp {df['timestamp_utc'].iloc[i]!r}"
            elif bad_node[i]:
                msg = "empty node_id"
            else:
                msg = f"bad price {df['price_usd_per_mwh'].iloc[i]!r}"
            sink.append(RowError(line=line, message=msg))
        n_rows = len(df)
        if (
            n_rows >= _BUDGET_GRACE_ROWS
            and bad.sum() >= _BUDGET_GRACE_ERRORS
            and bad.sum() > error_budget * n_rows
        ):
            raise ErrorBudgetExceeded(
                f"{int(bad.sum())} malformed rows in {n_rows} (budget {error_budget:.2%})"
            )
    keep = ~bad
    epoch = (stamps.astype("int64").to_numpy() // 10**9)[keep]
    return nodes[keep].astype(str), epoch.astype(np.int64), prices[keep]


def lmp_series_from_csv(
    path,
    resolution: Resolution,
    zone: str = "UTC",
    *,
    grid: TimeGrid | None = None,
    price_bound: float = DEFAULT_PRICE_BOUND,
    errors: list[RowError] | None = None,
) -> dict[str, Series]:
    """Load a canonical LMP CSV straight into per-node Series on one grid."""
    nodes, ts, prices = load_lmp_frame(path, price_bound=price_bound, errors=errors)
    if grid is None:
        grid = infer_grid(ts, resolution, zone)
    return series_from_arrays(nodes, ts, prices, grid, unit=Unit.USD_PER_MWH)


def series_from_arrays(
    ids: np.ndarray, timestamps: np.ndarray, values: np.ndarray, grid: TimeGrid, unit: Unit
) -> dict[str, Series]:
    """Vectorized equivalent of :func:`to_series` for bulk arrays."""
    step = grid.resolution.seconds
    offsets = np.asarray(timestamps, dtype=np.int64) - grid.start
    if np.any(offsets % step != 0):
        bad = int(np.asarray(timestamps)[offsets % step != 0][0])
        raise OffGridTimestamp(f"{format_rfc3339(bad)} not aligned to {step}s grid")
    idx = offsets // step
    out_of_range = (idx < 0) | (idx >= grid.length)
    if out_of_range.any():
        bad = int(np.asarray(timestamps)[out_of_range][0])
        raise OffGridTimestamp(
            f"{format_rfc3339(bad)} outside grid [{format_rfc3339(grid.start)}, {format_rfc3339(grid.end)})"
        )
    codes, uniques = pd.factorize(np.asarray(ids), sort=True)
    flat = codes.astype(np.int64) * grid.length + idx
    if len(np.unique(flat)) != len(flat):
        flat_sorted = np.sort(flat)
        dup_flat = int(flat_sorted[np.nonzero(np.diff(flat_sorted) == 0)[0][0]])
        dup_id = uniques[dup_flat // grid.length]
        dup_ts = grid.start + (dup_flat % grid.length) * step
        raise DuplicateError(f"duplicate record for {dup_id} at {format_rfc3339(dup_ts)}")

    out: dict[str, Series] = {}
    values = np.asarray(values, dtype=np.float64)
    for code, name in enumerate(uniques):
        sel = codes == code
        series_vals = np.full(grid.length, np.nan)
        mask = np.zeros(grid.length, dtype=bool)
        series_vals[idx[sel]] = values[sel]
        mask[idx[sel]] = True
        out[str(name)] = Series(grid=grid, values=series_vals, unit=unit, mask=mask)
    return out


def curtailment_series_from_csv(
    path,
    descriptor: IsoDescriptor,
    *,
    grid: TimeGrid | None = None,
    pct_flag_threshold: float = 0.0,
    errors: list[RowError] | None = None,
) -> dict[str, Series]:
    """Load a canonical curtailment CSV into per-region normalized Series."""
    records = list(parse_curtailment(path, descriptor, errors=errors))
    if grid is None:
        ts = np.array([r.timestamp for r in records], dtype=np.int64)
        grid = infer_grid(ts, descriptor.granularity, descriptor.zone)
    return curtailment_to_series(records, grid, pct_flag_threshold=pct_flag_threshold)


# -- canonical CSV writers -----------------------------------------------------

def write_lmp_csv(path, series_by_node: Mapping[str, Series]) -> None:
    """Write per-node price series as canonical LMP CSV (gaps become missing rows)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(LMP_HEADER) + "\n")
        for node in sorted(series_by_node):
            s = series_by_node[node]
            ts = s.grid.timestamps()
            for i in np.nonzero(s.mask)[0]:
                fh.write(f"{node},{format_rfc3339(int(ts[i]))},{float(s.values[i])!r}\n")


def write_curtailment_csv(path, records: Iterable[CurtailmentRecord]) -> None:
    """Write curtailment records as canonical CSV, sorted for determinism."""
    ordered = sorted(records, key=lambda r: (r.region_id, r.timestamp))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CURTAILMENT_HEADER) + "\n")
        for rec in ordered:
            if rec.kind is PayloadKind.FLAG:
                v1 = "true" if rec.v1 > 0 else "false"
            else:
                v1 = repr(float(rec.v1))
            v2 = repr(float(rec.v2)) if rec.v2 is not None else ""
            fh.write(
                f"{rec.region_id},{format_rfc3339(rec.timestamp)},{rec.kind.value},{v1},{v2}\n"
            )


# -- columnar cache -----------------------------------------------------------

_UNIT_CODES = {unit: i for i, unit in enumerate(Unit)}
_CODE_UNITS = {i: unit for unit, i in _UNIT_CODES.items()}


def write_canonical(path, series_by_id: Mapping[str, Series]) -> None:
    """Write a set of series to the versioned columnar cache format."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<HI", CACHE_VERSION, len(series_by_id)))
        for sid in sorted(series_by_id):
            s = series_by_id[sid]
            sid_b = sid.encode("utf-8")
            zone_b = s.grid.zone.encode("utf-8")
            fh.write(struct.pack("<H", len(sid_b)))
            fh.write(sid_b)
            fh.write(struct.pack("<B", _UNIT_CODES[s.unit]))
            fh.write(struct.pack("<qII", s.grid.start, s.grid.length, s.grid.resolution.seconds))
            fh.write(struct.pack("<H", len(zone_b)))
            fh.write(zone_b)
            fh.write(np.packbits(s.mask, bitorder="little").tobytes())
            fh.write(np.ascontiguousarray(s.values, dtype="<f8").tobytes())


def read_canonical(path) -> dict[str, Series]:
    """Read a columnar cache written by :func:`write_canonical`."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    if blob[:4] != CACHE_MAGIC:
        raise IoError(f"{path}: not a curtailkit cache (bad magic)")
    version, count = struct.unpack_from("<HI", blob, 4)
    if version > CACHE_VERSION:
        raise VersionError(f"{path}: format version {version} > supported {CACHE_VERSION}")
    pos = 10
    out: dict[str, Series] = {}
    try:
        for _ in range(count):
            (sid_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            sid = blob[pos : pos + sid_len].decode("utf-8")
            pos += sid_len
            (unit_code,) = struct.unpack_from("<B", blob, pos)
            pos += 1
            start, length, res_seconds = struct.unpack_from("<qII", blob, pos)
            pos += 16
            (zone_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            zone = blob[pos : pos + zone_len].decode("utf-8")
            pos += zone_len
            n_mask_bytes = (length + 7) // 8
            mask = np.unpackbits(
                np.frombuffer(blob, dtype=np.uint8, count=n_mask_bytes, offset=pos),
                bitorder="little",
                count=length,
            ).astype(bool)
            pos += n_mask_bytes
            values = np.frombuffer(blob, dtype="<f8", count=length, offset=pos).astype(np.float64)
            pos += 8 * length
            grid = TimeGrid(start=start, length=length, resolution=Resolution(res_seconds), zone=zone)
            out[sid] = Series(grid=grid, values=values, unit=_CODE_UNITS[unit_code], mask=mask)
    except (struct.error, IndexError, KeyError, ValueError) as exc:
        raise IoError(f"{path}: truncated or corrupt cache: {exc}") from exc
    return out


# -- adapter configs for raw ISO downloads -------------------------------------

@dataclass(frozen=True)
class AdapterConfig:
    """Column mapping + time zone that turns a raw ISO file into canonical rows.

    ``columns`` maps canonical field names to raw column names. For LMP the
    fields are node_id/timestamp/price; for curtailment they are
    region_id/timestamp plus v1 (and v2 for cap_out). ``timezone`` names the
    zone the raw timestamps are stamped in (converted to UTC on output).
    """

    kind: str  # "lmp" | "curtailment"
    iso: Iso
    columns: Mapping[str, str]
    timezone: str = "UTC"
    timestamp_format: str | None = None
    delimiter: str = ","
    payload_kind: PayloadKind | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("lmp", "curtailment"):
            raise ValueError(f"adapter kind must be lmp or curtailment, got {self.kind!r}")
        required = {"node_id", "timestamp", "price"} if self.kind == "lmp" else {"region_id", "timestamp", "v1"}
        missing = required - set(self.columns)
        if missing:
            raise ValueError(f"adapter is missing column mappings: {sorted(missing)}")
        if self.kind == "curtailment":
            expected = descriptor_for(self.iso).payload_kind
            if self.payload_kind is not None and self.payload_kind is not expected:
                raise ValueError(
                    f"{self.iso.value} reports {expected.value}; adapter says {self.payload_kind.value}"
                )
            if expected is PayloadKind.CAP_OUT and "v2" not in self.columns:
                raise ValueError("cap_out adapters must map a v2 (output) column")


def load_adapter_config(path) -> AdapterConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    payload = raw.get("payload_kind")
    return AdapterConfig(
        kind=raw["kind"],
        iso=Iso(raw["iso"]),
        columns=dict(raw["columns"]),
        timezone=raw.get("timezone", "UTC"),
        timestamp_format=raw.get("timestamp_format"),
        delimiter=raw.get("delimiter", ","),
        payload_kind=PayloadKind(payload) if payload else None,
    )


def _raw_timestamps_to_epoch(col: pd.Series, adapter: AdapterConfig) -> pd.Series:
    stamps = pd.to_datetime(col, format=adapter.timestamp_format, errors="coerce")
    if stamps.dt.tz is None:
        stamps = stamps.dt.tz_localize(adapter.timezone)
    return stamps.dt.tz_convert("UTC")


def convert_raw_lmp(raw_path, adapter: AdapterConfig, out_path) -> int:
    """Convert a raw LMP download to a canonical CSV; returns rows written."""
    if adapter.kind != "lmp":
        raise ValueError("adapter is not an LMP adapter")
    df = pd.read_csv(raw_path, sep=adapter.delimiter)
    cols = adapter.columns
    stamps = _raw_timestamps_to_epoch(df[cols["timestamp"]], adapter)
    out = pd.DataFrame(
        {
            "node_id": df[cols["node_id"]].astype(str),
            "timestamp_utc": stamps.dt.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "price_usd_per_mwh": pd.to_numeric(df[cols["price"]], errors="coerce"),
        }
    )
    out = out.dropna()
    out = out.sort_values(["node_id", "timestamp_utc"], kind="stable")
    out.to_csv(out_path, index=False, lineterminator="\n")
    return len(out)


def convert_raw_curtailment(raw_path, adapter: AdapterConfig, out_path) -> int:
    """Convert a raw curtailment download to a canonical CSV; returns rows written."""
    if adapter.kind != "curtailment":
        raise ValueError("adapter is not a curtailment adapter")
    descriptor = descriptor_for(adapter.iso)
    kind = descriptor.payload_kind
    df = pd.read_csv(raw_path, sep=adapter.delimiter)
    cols = adapter.columns
    stamps = _raw_timestamps_to_epoch(df[cols["timestamp"]], adapter)
    records: list[CurtailmentRecord] = []
    for region, stamp, v1, v2 in zip(
        df[cols["region_id"]].astype(str),
        stamps,
        df[cols["v1"]],
        df[cols["v2"]] if "v2" in cols else [None] * len(df),
    ):
        if pd.isna(stamp):
            continue
        ts = int(stamp.timestamp())
        if kind is PayloadKind.FLAG:
            v1_val = _parse_flag(str(v1))
        else:
            v1_val = float(v1)
        v2_val = float(v2) if v2 is not None and not pd.isna(v2) else None
        records.append(CurtailmentRecord(region, ts, kind, v1_val, v2_val))
    write_curtailment_csv(out_path, records)
    return len(records)


# -- catalog --------------------------------------------------------------------

CATALOG_FILENAME = "catalog.json"


@dataclass(frozen=True)
class DatasetEntry:
    descriptor: IsoDescriptor
    lmp_files: tuple[Path, ...]
    curtailment_files: tuple[Path, ...]
    lmp_cache: Path | None = None
    curtailment_cache: Path | None = None
    node_roster: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.node_roster is not None and len(set(self.node_roster)) != len(self.node_roster):
            raise ValueError(f"{self.descriptor.iso_id.value}: node roster has duplicate ids")


@dataclass(frozen=True)
class Catalog:
    """Index of canonical datasets per ISO, loaded from ``catalog.json``."""

    root: Path
    datasets: tuple[DatasetEntry, ...]

    def dataset_for(self, iso: Iso | str) -> DatasetEntry:
        iso = Iso(iso) if not isinstance(iso, Iso) else iso
        for entry in self.datasets:
            if entry.descriptor.iso_id is iso:
                return entry
        raise MissingData(f"catalog has no dataset for {iso.value}")


def load_catalog(path) -> Catalog:
    """Load a catalog from a directory (containing catalog.json) or a JSON file."""
    path = Path(path)
    if path.is_dir():
        path = path / CATALOG_FILENAME
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise MissingData(f"cannot read catalog {path}: {exc}") from exc
    root = path.parent
    datasets = []
    for entry in raw.get("datasets", []):
        descriptor = descriptor_for(Iso(entry["iso"]), zone=entry.get("zone"))
        lmp_files = tuple(root / p for p in entry.get("lmp_files", []))
        curt_files = tuple(root / p for p in entry.get("curtailment_files", []))
        for p in (*lmp_files, *curt_files):
            if not p.exists():
                raise MissingData(f"catalog references missing file {p}")
        lmp_cache = entry.get("lmp_cache")
        curt_cache = entry.get("curtailment_cache")
        datasets.append(
            DatasetEntry(
                descriptor=descriptor,
                lmp_files=lmp_files,
                curtailment_files=curt_files,
                lmp_cache=root / lmp_cache if lmp_cache else None,
                curtailment_cache=root / curt_cache if curt_cache else None,
                node_roster=tuple(entry["node_roster"]) if entry.get("node_roster") else None,
            )
        )
    return Catalog(root=root, datasets=tuple(datasets))


def save_catalog(catalog: Catalog, path=None) -> Path:
    """Write a catalog back to JSON (paths stored relative to the root)."""
    path = Path(path) if path else catalog.root / CATALOG_FILENAME
    payload = {
        "datasets": [
            {
                "iso": e.descriptor.iso_id.value,
                "zone": e.descriptor.zone,
                "lmp_files": [str(p.relative_to(catalog.root)) for p in e.lmp_files],
                "curtailment_files": [str(p.relative_to(catalog.root)) for p in e.curtailment_files],
                **({"lmp_cache": str(e.lmp_cache.relative_to(catalog.root))} if e.lmp_cache else {}),
                **(
                    {"curtailment_cache": str(e.curtailment_cache.relative_to(catalog.root))}
                    if e.curtailment_cache
                    else {}
                ),
                **({"node_roster": list(e.node_roster)} if e.node_roster else {}),
            }
            for e in catalog.datasets
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_dataset_series(
    entry: DatasetEntry, *, prefer_cache: bool = True
) -> tuple[dict[str, Series], dict[str, Series]]:
    """Load (lmp_by_node, curtailment_by_region) for one catalog entry.

    The columnar cache is preferred when present; CSVs are the fallback.
    """
    descriptor = entry.descriptor
    lmp: dict[str, Series] = {}
    if prefer_cache and entry.lmp_cache and entry.lmp_cache.exists():
        lmp = read_canonical(entry.lmp_cache)
    elif entry.lmp_files:
        parts = [load_lmp_frame(f) for f in entry.lmp_files]
        nodes = np.concatenate([p[0] for p in parts])
        ts = np.concatenate([p[1] for p in parts])
        prices = np.concatenate([p[2] for p in parts])
        grid = infer_grid(ts, descriptor.granularity, descriptor.zone)
        lmp = series_from_arrays(nodes, ts, prices, grid, unit=Unit.USD_PER_MWH)
    curt: dict[str, Series] = {}
    if prefer_cache and entry.curtailment_cache and entry.curtailment_cache.exists():
        curt = read_canonical(entry.curtailment_cache)
    elif entry.curtailment_files:
        records: list[CurtailmentRecord] = []
        for f in entry.curtailment_files:
            records.extend(parse_curtailment(f, descriptor))
        all_ts = np.array([r.timestamp for r in records], dtype=np.int64)
        grid = infer_grid(all_ts, descriptor.granularity, descriptor.zone)
        curt = curtailment_to_series(records, grid)
    return lmp, curt
