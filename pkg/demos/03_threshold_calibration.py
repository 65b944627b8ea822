"""From nodal prices to a curtailment price threshold.

Renewable generators bid at or near zero, so low prices are evidence of
curtailment. We bin the minimum LMP, measure how often curtailment happened
in each bin, force the curve to be non-increasing, and read off the price
where it crosses a target likelihood. On synthetic data with a known $2
crossover the pipeline should recover it to within a bin.
"""

import numpy as np

from curtailkit import (
    HOURLY,
    below_threshold_heatmap,
    bin_signal,
    calibration_curve,
    detect,
    extract_threshold,
    min_lmp_series,
)
from curtailkit.synth import logistic_curtailment_world

# A synthetic world where P(curtail | min LMP = x) crosses 50% at exactly $2.
nodal, curtailment = logistic_curtailment_world(
    50_000, seed=42, x0=2.0, scale=1.0, n_nodes=4, event_mw=800.0
)
floor = min_lmp_series(nodal)
print(f"{len(nodal)} nodes, {floor.grid.length} steps")
print(f"min LMP range: {floor.values.min():.1f} .. {floor.values.max():.1f} USD/MWh")

# --- calibration curve ---------------------------------------------------------

curve = calibration_curve(
    floor,
    curtailment,
    amount_level=500.0,  # "curtailing" means at least 500 MW here
    bin_edges=np.arange(-50.0, 51.0, 1.0),
    min_count=30,
)
calibrated = np.nonzero(curve.calibrated)[0]
print(f"\ncalibrated bins: {len(calibrated)} of {len(curve.frequency)}")
print("price bin     freq      n")
for b in calibrated[:: max(1, len(calibrated) // 8)]:
    lo, hi = curve.bin_edges[b], curve.bin_edges[b + 1]
    print(f"[{lo:5.0f},{hi:4.0f})  {curve.frequency[b]:.3f}  {curve.sample_count[b]:6d}")

# --- threshold at 50% likelihood ----------------------------------------------

result = extract_threshold(curve, target=0.5)
print(f"\n50% likelihood threshold: ${result.threshold_price:.2f} (true $2.00)")
print(f"saturated: {result.saturated}, method: {result.method}")
assert 1.0 <= result.threshold_price <= 3.0

# Lower targets sit at higher prices (the fitted curve is non-increasing).
for target in (0.3, 0.5, 0.7):
    r = extract_threshold(curve, target)
    print(f"  target {target:.0%} -> ${r.threshold_price:.2f}")

# --- boolean and binned signals -------------------------------------------------

node, series = next(iter(sorted(nodal.items())))
signal = detect(series, result.threshold_price, node_id=node)
share = signal.series.present_values().mean()
print(f"\n{node}: flagged {share:.1%} of steps at ${result.threshold_price:.2f}")

binned = bin_signal(series, edges=[0.0, result.threshold_price, 10.0], node_id=node)
counts = np.bincount(binned.series.present_values().astype(int), minlength=4)
print(f"binned occupancy (4 bins): {list(counts)}")

# --- where and when prices sit below the threshold ------------------------------

stats = below_threshold_heatmap(nodal, result.threshold_price, HOURLY, "UTC")
print("\nper-node fraction below threshold (all buckets):")
for i, node_id in enumerate(stats.node_ids):
    print(f"  {node_id}: {stats.node_total[i]:.3f}")
