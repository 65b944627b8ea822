"""Grids, gap-aware series, resampling, alignment, and time-of-day profiles.

Everything in curtailkit lives on a uniform UTC grid. This walkthrough builds
a week of 5-minute data, downsamples it to hourly, aligns two partially
overlapping series, and summarizes the daily shape the way the `plot
time_of_day` command does.
"""

import numpy as np

from curtailkit import (
    FIVE_MIN,
    HOURLY,
    Series,
    TimeGrid,
    Unit,
    align,
    format_rfc3339,
    resample,
    time_of_day_profile,
    window,
)

START = 1654041600  # 2022-06-01T00:00:00Z

# --- a week of 5-minute curtailment-like data with a midday hump ------------

rng = np.random.default_rng(0)
n = 7 * 288
grid = TimeGrid(start=START, length=n, resolution=FIVE_MIN, zone="America/Chicago")
step_of_day = np.arange(n) % 288
hump = np.clip(-np.cos(2 * np.pi * step_of_day / 288), 0, None)
values = 800 * hump + rng.normal(0, 40, n)
values = np.clip(values, 0, None)

# Knock out a random 2% of steps: gaps are explicit, never fake zeros.
mask = rng.uniform(size=n) > 0.02
series = Series(grid=grid, values=values, unit=Unit.MW, mask=mask)
print(f"5-min series: {len(series)} steps, {series.gap_count} gaps")
print(f"covers [{format_rfc3339(grid.start)}, {format_rfc3339(grid.end)})")

# --- downsample to hourly ----------------------------------------------------

# Strict by default: any gap inside an hour makes that hour a gap.
hourly_strict = resample(series, HOURLY, "mean")
# Tolerant: hours with <= 25% missing are averaged over what is present.
hourly_tolerant = resample(series, HOURLY, "mean", gap_tolerance=0.25)
print(f"\nhourly strict:   {hourly_strict.gap_count} gap hours")
print(f"hourly tolerant: {hourly_tolerant.gap_count} gap hours")

# Gap-free resampling conserves totals exactly.
gap_free = Series(grid=grid, values=values, unit=Unit.MW)
assert np.isclose(resample(gap_free, HOURLY, "mean").values.mean(), values.mean(), rtol=1e-12)
assert np.isclose(resample(gap_free, HOURLY, "sum").values.sum(), values.sum(), rtol=1e-12)
print("mean/sum conservation checks passed")

# --- align two series that only partly overlap -------------------------------

late_grid = TimeGrid(start=START + 2 * 86400, length=n, resolution=FIVE_MIN)
late = Series(grid=late_grid, values=values, unit=Unit.MW)
a, b = align(gap_free, late)
print(f"\naligned overlap: {a.grid.length} steps starting {format_rfc3339(a.grid.start)}")

# --- window out a single day -------------------------------------------------

tuesday = window(gap_free, START + 86400, 86400)
print(f"one-day window: {tuesday.grid.length} steps, peak {tuesday.values.max():.0f} MW")

# --- time-of-day profile (the daily-shape summary) ----------------------------

profile = time_of_day_profile(gap_free, HOURLY, "America/Chicago")
print("\nlocal hour    median    q25..q75")
for h in (0, 6, 12, 18):
    print(
        f"{h:10d}  {profile.median[h]:8.1f}  {profile.q25[h]:7.1f}..{profile.q75[h]:.1f}"
        f"  (n={profile.count[h]})"
    )
