"""Scoring forecasts by what a flexible load would have captured.

A device must run for c minutes somewhere in a w-long window. Guided by a
forecast, it runs during the k steps the forecast ranks best; the impact is
the mean actual curtailment over those steps. Baselines: run immediately
(first k steps) or at random (the window mean). Selecting on the actuals
themselves gives the oracle ceiling and anti-oracle floor every forecast
sits between.
"""

from curtailkit import (
    FIVE_MIN,
    Horizon,
    LoadShiftSpec,
    backtest,
    load_shift_impact,
    sweep,
)
from curtailkit.evaluate import DEVICE_WINDOW_PRESETS
from curtailkit.forecast import BASELINES
from curtailkit.synth import daily_pattern_series

DAY = 86400

# 5-minute resolution so even a 30-minute thermostat burst is on-grid.
history = daily_pattern_series(14, seed=9, resolution=FIVE_MIN, noise=80.0)
start = history.grid.start

# --- one window, by hand -----------------------------------------------------

spec = LoadShiftSpec(t=start + 7 * DAY, w=DAY, c=4 * 3600)  # 4 usable hours in a day
report = load_shift_impact(history, history, spec)  # perfect foresight
print("perfect forecast on one day:")
print(f"  forecast-guided: {report.forecast_impact:8.1f} MW  (== oracle {report.oracle_impact:.1f})")
print(f"  immediate:       {report.immediate_baseline:8.1f} MW")
print(f"  random-time:     {report.random_baseline:8.1f} MW")
print(f"  anti-oracle:     {report.anti_oracle_impact:8.1f} MW")
chosen_hours = sorted({int(i) // 12 for i in report.selected_steps})
print(f"  hours touched:   {chosen_hours}")

# Devices that cannot pause use the contiguous-block variant.
block = load_shift_impact(history, history, LoadShiftSpec(t=spec.t, w=DAY, c=4 * 3600, contiguous=True))
print(f"  contiguous block: {block.forecast_impact:.1f} MW starting hour {int(block.selected_steps[0]) // 12}")

# --- every device preset, every backtest window --------------------------------

schedule = [start + d * DAY for d in range(3, 13)]
horizon = Horizon(length=DAY)
specs = [
    LoadShiftSpec(t=None, w=DEVICE_WINDOW_PRESETS["grid_battery"], c=4 * 3600),
    LoadShiftSpec(t=None, w=DEVICE_WINDOW_PRESETS["residential_ev"], c=2 * 3600),
    LoadShiftSpec(t=None, w=DEVICE_WINDOW_PRESETS["smart_thermostat"], c=1800),
]

print("\nforecaster comparison (uplift of mean impact vs random-time usage):")
for name, cls in sorted(BASELINES.items()):
    result = backtest(cls(), history, schedule, horizon)
    agg = sweep(result, specs)
    cells = []
    for row in agg.rows:
        cells.append(f"w={row.spec.w // 3600:3d}h x{row.uplift_vs_random:5.2f}")
    print(f"  {name:22s} {'  '.join(cells)}")

print("\n(an uplift of 1.00 means no better than running at a random time)")
