"""Synthetic market data for demos, tests, and calibration sanity checks.

All generators are seeded and deterministic: the same seed always produces
byte-identical series.
"""

from __future__ import annotations

import numpy as np

from .timeseries import FIVE_MIN, Resolution, Series, TimeGrid, Unit

DEFAULT_START = 1640995200  # 2022-01-01T00:00:00Z


def logistic_curtailment_world(
    n_steps: int,
    *,
    seed: int,
    x0: float = 2.0,
    scale: float = 1.0,
    lmp_low: float = -20.0,
    lmp_high: float = 24.0,
    n_nodes: int = 1,
    event_mw: float = 800.0,
    resolution: Resolution = FIVE_MIN,
    start: int = DEFAULT_START,
    zone: str = "UTC",
) -> tuple[dict[str, Series], Series]:
    """Nodal LMP plus curtailment where P(curtail | min LMP = x) = 1/(1+e^{(x-x0)/s}).

    The minimum LMP is uniform on [lmp_low, lmp_high]; one node carries the
    minimum each step and the others sit a non-negative premium above it.
    Curtailment steps carry ``event_mw``, others 0.
    """
    rng = np.random.default_rng(seed)
    grid = TimeGrid(start=start, length=n_steps, resolution=resolution, zone=zone)
    x = rng.uniform(lmp_low, lmp_high, n_steps)
    p_event = 1.0 / (1.0 + np.exp((x - x0) / scale))
    events = rng.uniform(0.0, 1.0, n_steps) < p_event

    nodal: dict[str, Series] = {}
    min_holder = rng.integers(0, n_nodes, n_steps)
    for i in range(n_nodes):
        premium = rng.exponential(15.0, n_steps)
        vals = np.where(min_holder == i, x, x + premium)
        nodal[f"NODE_{i:03d}"] = Series(grid=grid, values=vals, unit=Unit.USD_PER_MWH)

    curtailment = Series(
        grid=grid, values=np.where(events, event_mw, 0.0), unit=Unit.MW
    )
    return nodal, curtailment


def daily_pattern_series(
    n_days: int,
    *,
    seed: int,
    resolution: Resolution = FIVE_MIN,
    base: float = 500.0,
    amplitude: float = 400.0,
    noise: float = 0.0,
    unit: Unit = Unit.MW,
    start: int = DEFAULT_START,
    zone: str = "UTC",
) -> Series:
    """A 24h-periodic series (midday hump) with optional Gaussian noise.

    With ``noise=0`` the series is exactly periodic, which makes day-ahead
    persistence a perfect forecaster — handy for harness checks.
    """
    rng = np.random.default_rng(seed)
    steps_per_day = 86400 // resolution.seconds
    n_steps = n_days * steps_per_day
    grid = TimeGrid(start=start, length=n_steps, resolution=resolution, zone=zone)
    phase = 2.0 * np.pi * (np.arange(n_steps) % steps_per_day) / steps_per_day
    vals = base + amplitude * np.clip(-np.cos(phase), 0.0, None)
    if noise > 0.0:
        vals = vals + rng.normal(0.0, noise, n_steps)
    vals = np.clip(vals, 0.0, None)
    return Series(grid=grid, values=vals, unit=unit)


def random_gappy_series(
    n_steps: int,
    *,
    seed: int,
    resolution: Resolution = FIVE_MIN,
    gap_fraction: float = 0.1,
    unit: Unit = Unit.USD_PER_MWH,
    loc: float = 20.0,
    spread: float = 15.0,
    start: int = DEFAULT_START,
    zone: str = "UTC",
) -> Series:
    """Gaussian series with a random fraction of gaps; for property tests."""
    rng = np.random.default_rng(seed)
    grid = TimeGrid(start=start, length=n_steps, resolution=resolution, zone=zone)
    vals = rng.normal(loc, spread, n_steps)
    mask = rng.uniform(0.0, 1.0, n_steps) >= gap_fraction
    if not mask.any():
        mask[0] = True
    return Series(grid=grid, values=vals, unit=unit, mask=mask)
