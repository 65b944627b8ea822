"""Shared fixtures and independent oracles used across the test suite."""

from datetime import datetime
from zoneinfo import ZoneInfo

import numpy as np
import pytest

from curtailkit import FIVE_MIN, Series, TimeGrid, Unit

START = 1654041600  # 2022-06-01T00:00:00Z


def make_series(values, *, start=START, resolution=FIVE_MIN, unit=Unit.MW, zone="UTC", mask=None):
    grid = TimeGrid(start=start, length=len(values), resolution=resolution, zone=zone)
    return Series(grid=grid, values=values, unit=unit, mask=mask)


def interp_quantile(sorted_values, q):
    """Brute-force linear-interpolation quantile (type 7), independent of numpy."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    pos = q * (n - 1)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return float(sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac)


def local_bucket_bruteforce(ts, zone, bucket_seconds):
    """Per-timestamp local bucket via datetime, the slow reference path."""
    tz = ZoneInfo(zone)
    out = []
    for t in ts:
        dt = datetime.fromtimestamp(int(t), tz)
        out.append((dt.hour * 3600 + dt.minute * 60 + dt.second) // bucket_seconds)
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20220601)
