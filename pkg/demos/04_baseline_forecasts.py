"""Baseline forecasters and the rolling-origin backtest harness.

Three baselines ship with the package: persistence (last value), day-ahead
persistence (same time yesterday), and climatology (time-of-day median).
The backtest refits on a strictly-prior history slice at every issue time,
so no forecaster can peek at the future even by accident.
"""

import numpy as np

from curtailkit import (
    HOURLY,
    Horizon,
    backtest,
    climatology,
    day_ahead_persistence,
    persistence,
    regression_metrics,
    to_signal,
)
from curtailkit.forecast import BASELINES
from curtailkit.synth import daily_pattern_series

DAY = 86400

# Two weeks of hourly curtailment with a clean daily shape plus noise.
history = daily_pattern_series(14, seed=5, resolution=HOURLY, noise=60.0)
issued_at = history.grid.start + 7 * DAY
horizon = Horizon(lead=0, length=DAY)

# --- the three baselines, one issue time ----------------------------------------

fc_persist = persistence(history, issued_at, horizon)
fc_dayahead = day_ahead_persistence(history, issued_at, horizon)
fc_climo = climatology(history, issued_at, horizon)
print("first 6 predicted values:")
print(f"  persistence: {np.round(fc_persist.series.values[:6], 1)}")
print(f"  day-ahead:   {np.round(fc_dayahead.series.values[:6], 1)}")
print(f"  climatology: {np.round(fc_climo.series.values[:6], 1)}")

# A regression forecast converts to a binary signal for threshold consumers.
signal = to_signal(fc_climo, threshold=600.0)
print(f"climatology as binary signal (<= 600 MW): {int(signal.series.values.sum())} of 24 flagged")

# --- rolling-origin backtest ------------------------------------------------------

schedule = [history.grid.start + d * DAY for d in range(3, 13)]
print(f"\nbacktesting {len(schedule)} daily issues:")
for name, cls in sorted(BASELINES.items()):
    result = backtest(cls(), history, schedule, horizon)
    maes = [regression_metrics(e.forecast, e.actual).mae for e in result.entries]
    print(f"  {name:22s} windows={len(result.entries)} mean MAE={np.mean(maes):7.2f}")

# On a perfectly 24h-periodic series, day-ahead persistence is exact.
clean = daily_pattern_series(6, seed=0, resolution=HOURLY, noise=0.0)
perfect = backtest(
    BASELINES["day_ahead_persistence"](),
    clean,
    [clean.grid.start + d * DAY for d in range(2, 5)],
    horizon,
)
worst = max(regression_metrics(e.forecast, e.actual).rmse for e in perfect.entries)
print(f"\nday-ahead persistence on noiseless periodic data: worst RMSE = {worst}")
assert worst == 0.0
