"""Canonical interchange formats: CSV for interoperability, columnar cache
for speed.

The CSV layer is row-per-observation with malformed rows reported by line
number (an error budget aborts hopeless files). The cache layer stores whole
series with an explicit gap bitmap and round-trips bit-exactly.
"""

import tempfile
from pathlib import Path


from curtailkit import (
    CurtailmentRecord,
    PayloadKind,
    derive_curtailment_mw,
    descriptor_for,
    parse_curtailment,
    parse_lmp,
    read_canonical,
    write_canonical,
)
from curtailkit.ingest import write_curtailment_csv, write_lmp_csv, lmp_series_from_csv
from curtailkit.synth import logistic_curtailment_world

workdir = Path(tempfile.mkdtemp(prefix="curtailkit_demo_"))
print(f"working in {workdir}")

nodal, curtailment = logistic_curtailment_world(2000, seed=1, n_nodes=3)

# --- LMP: write canonical CSV, stream it back --------------------------------

lmp_csv = workdir / "lmp.csv"
write_lmp_csv(lmp_csv, nodal)
print(f"\nwrote {lmp_csv.name}: {sum(1 for _ in open(lmp_csv)) - 1} rows")

records = list(parse_lmp(lmp_csv))
print(f"streamed back {len(records)} records, first: {records[0]}")

# Corrupt two rows and watch them get reported (with line numbers), not fatal.
lines = lmp_csv.read_text().splitlines()
lines[5] = "NODE_000,2022-01-01T00:20:00Z,NaN"
lines[9] = "NODE_000,not-a-time,1.0"
(workdir / "lmp_dirty.csv").write_text("\n".join(lines) + "\n")
errors = []
kept = list(parse_lmp(workdir / "lmp_dirty.csv", errors=errors))
print(f"dirty file: kept {len(kept)} rows, errors:")
for err in errors:
    print(f"  line {err.line}: {err.message}")

# --- curtailment: the four reporting variants share one schema ----------------

ts = int(curtailment.grid.start)
samples = [
    CurtailmentRecord("SPP", ts, PayloadKind.MW, 1250.0, None),
    CurtailmentRecord("ERCOT", ts, PayloadKind.CAP_OUT, 100.0, 80.0),
    CurtailmentRecord("ISONE", ts, PayloadKind.FLAG, 1.0, None),
    CurtailmentRecord("PJM", ts, PayloadKind.PCT, 31.4, None),
]
for rec in samples:
    value, unit = derive_curtailment_mw(rec)
    print(f"{rec.region_id:6s} {rec.kind.value:8s} -> {value:g} ({unit.value})")

ercot_csv = workdir / "ercot.csv"
write_curtailment_csv(
    ercot_csv,
    [
        CurtailmentRecord("ERCOT", ts + 300 * i, PayloadKind.CAP_OUT, 100.0 + i, 80.0)
        for i in range(5)
    ],
)
back = list(parse_curtailment(ercot_csv, descriptor_for("ERCOT")))
print(f"\nERCOT cap/out rows round-tripped: {len(back)}")

# --- columnar cache: bit-exact, fast ------------------------------------------

cache = workdir / "lmp.ckt"
write_canonical(cache, nodal)
loaded = read_canonical(cache)
assert loaded == nodal
print(f"cache round trip exact: {len(loaded)} series, {cache.stat().st_size} bytes")

# The CSV loader is the bulk path the CLI uses; same result as streaming.
bulk = lmp_series_from_csv(lmp_csv, nodal["NODE_000"].grid.resolution)
assert bulk == nodal
print("bulk CSV loader agrees with the cache contents")
