import numpy as np
import pytest

from curtailkit import (
    FIVE_MIN,
    HOURLY,
    Horizon,
    PersistenceForecaster,
    Series,
    SignalType,
    TimeGrid,
    Unit,
    backtest,
    climatology,
    day_ahead_persistence,
    persistence,
    to_signal,
)
from curtailkit.errors import (
    AlreadyDiscrete,
    InsufficientHistory,
    NoHistory,
    ScheduleOutOfRange,
)
from curtailkit.forecast import BASELINES, write_forecast_csv

from conftest import START, make_series

DAY = 86400


def corrupt_at_or_after(series, issued_at, rng):
    """Scramble values and presence at/after the issue time."""
    step = series.grid.resolution.seconds
    cut = max(0, (issued_at - series.grid.start) // step)
    values = series.values.copy()
    mask = series.mask.copy()
    n_after = series.grid.length - cut
    if n_after <= 0:
        return series
    values[cut:] = rng.normal(0, 1000, n_after)
    mask[cut:] = rng.uniform(size=n_after) > 0.5
    return Series(grid=series.grid, values=values, unit=series.unit, mask=mask)


def forecasts_equal(a, b):
    return a.series == b.series and a.issued_at == b.issued_at and a.horizon == b.horizon


class TestPersistence:
    def test_constant_continuation(self):
        history = make_series([3.0, 7.0, 12.0], resolution=HOURLY)
        fc = persistence(history, START + 3 * 3600, Horizon(length=DAY))
        assert fc.series.grid.length == 24
        assert np.all(fc.series.values == 12.0)

    def test_trailing_gap_run_skipped(self):
        history = make_series([3.0, 12.0, None, None], resolution=HOURLY)
        fc = persistence(history, START + 4 * 3600, Horizon(length=3600))
        assert fc.series.values[0] == 12.0

    def test_value_at_issue_time_excluded(self):
        # The observation stamped exactly at the issue instant is the future.
        history = make_series([5.0, 99.0], resolution=HOURLY)
        fc = persistence(history, START + 3600, Horizon(length=3600))
        assert fc.series.values[0] == 5.0

    def test_no_history(self):
        history = make_series([1.0, 2.0], resolution=HOURLY)
        with pytest.raises(NoHistory):
            persistence(history, START, Horizon(length=3600))
        all_gaps = make_series([None, 2.0], resolution=HOURLY)
        with pytest.raises(NoHistory):
            persistence(all_gaps, START + 3600, Horizon(length=3600))

    def test_zero_error_on_constant_series(self):
        history = make_series([4.2] * 48, resolution=HOURLY)
        fc = persistence(history, START + 24 * 3600, Horizon(length=DAY))
        actual = history.slice_steps(24, 48)
        assert np.array_equal(fc.series.values, actual.values)


class TestDayAheadPersistence:
    def test_shift_identity(self):
        yesterday = [float(h) for h in range(24)]
        history = make_series(yesterday + [0.0] * 0, resolution=HOURLY)
        fc = day_ahead_persistence(history, START + DAY, Horizon(length=DAY))
        assert list(fc.series.values) == yesterday

    def test_gap_propagates(self):
        vals = [float(h) for h in range(24)]
        vals[3] = None
        history = make_series(vals, resolution=HOURLY)
        fc = day_ahead_persistence(history, START + DAY, Horizon(length=DAY))
        assert not fc.series.mask[3]
        assert fc.series.values[4] == 4.0

    def test_insufficient_history(self):
        history = make_series([1.0] * 12, resolution=HOURLY)  # only 12h
        with pytest.raises(InsufficientHistory):
            day_ahead_persistence(history, START + 12 * 3600, Horizon(length=DAY))

    def test_long_horizon_wraps_within_yesterday(self):
        yesterday = [float(h) for h in range(24)]
        history = make_series(yesterday, resolution=HOURLY)
        fc = day_ahead_persistence(history, START + DAY, Horizon(length=2 * DAY))
        assert list(fc.series.values) == yesterday + yesterday

    def test_zero_error_on_periodic_series(self):
        pattern = [float(h) % 7 for h in range(24)]
        history = make_series(pattern * 3, resolution=HOURLY)
        fc = day_ahead_persistence(history, START + 2 * DAY, Horizon(length=DAY))
        actual = history.slice_steps(48, 72)
        assert np.array_equal(fc.series.values, actual.values)


class TestClimatology:
    def test_bucket_median(self):
        # Hour 7 of the training days sees {2, 4}; the 2-sample median is 3.
        day = [0.0] * 24
        d1, d2 = day.copy(), day.copy()
        d1[7], d2[7] = 2.0, 4.0
        history = make_series(d1 + d2, resolution=HOURLY)
        fc = climatology(history, START + 2 * DAY, Horizon(length=DAY))
        assert fc.series.values[7] == pytest.approx(3.0)

    def test_constant_history(self):
        history = make_series([5.5] * 48, resolution=HOURLY)
        fc = climatology(history, START + 2 * DAY, Horizon(length=DAY))
        assert np.all(fc.series.values == 5.5)

    def test_unseen_bucket_is_gap(self):
        vals = [1.0] * 12 + [None] * 12  # afternoon hours never observed
        history = make_series(vals, resolution=HOURLY)
        fc = climatology(history, START + DAY, Horizon(length=DAY))
        assert np.all(fc.series.mask[:12])
        assert not fc.series.mask[12:].any()

    def test_no_history(self):
        history = make_series([1.0] * 24, resolution=HOURLY)
        with pytest.raises(NoHistory):
            climatology(history, START, Horizon(length=DAY))

    def test_invariant_to_day_permutation(self, rng):
        days = [list(rng.normal(0, 10, 24)) for _ in range(5)]
        flat = [v for day in days for v in day]
        history = make_series(flat, resolution=HOURLY)
        issued = START + 5 * DAY
        base = climatology(history, issued, Horizon(length=DAY))
        order = rng.permutation(5)
        shuffled = [v for j in order for v in days[j]]
        permuted = make_series(shuffled, resolution=HOURLY)
        assert climatology(permuted, issued, Horizon(length=DAY)).series == base.series


class TestToSignal:
    def test_threshold_mode(self):
        history = make_series([5.0, 1.0], unit=Unit.USD_PER_MWH)
        fc = persistence(history, START + 600, Horizon(length=600))
        fc = to_signal(fc, threshold=1.62)
        assert fc.signal_type is SignalType.BINARY
        assert list(fc.series.values) == [1.0, 1.0]  # last value 1.0 <= 1.62

    def test_edges_mode(self):
        from curtailkit.forecast import ForecastSeries

        grid = TimeGrid(start=START, length=3, resolution=FIVE_MIN)
        fc = ForecastSeries(
            issued_at=START,
            horizon=Horizon(length=900),
            series=Series(grid=grid, values=[-5.0, 0.0, 10.0], unit=Unit.MW),
        )
        out = to_signal(fc, edges=[0.0, 5.0])
        assert out.signal_type is SignalType.BINNED
        assert list(out.series.values) == [0.0, 1.0, 2.0]

    def test_already_discrete(self):
        history = make_series([5.0, 1.0], unit=Unit.USD_PER_MWH)
        fc = to_signal(persistence(history, START + 600, Horizon(length=600)), threshold=0.0)
        with pytest.raises(AlreadyDiscrete):
            to_signal(fc, threshold=0.0)

    def test_exactly_one_mode(self):
        history = make_series([5.0, 1.0], unit=Unit.USD_PER_MWH)
        fc = persistence(history, START + 600, Horizon(length=600))
        with pytest.raises(ValueError):
            to_signal(fc)
        with pytest.raises(ValueError):
            to_signal(fc, threshold=1.0, edges=[0.0])


class TestBacktest:
    def test_hand_enumeration(self):
        series = make_series([1.0, 2.0, 3.0, 4.0], resolution=HOURLY)
        issues = [START + 2 * 3600, START + 3 * 3600]
        result = backtest(PersistenceForecaster(), series, issues, Horizon(length=3600))
        preds = [float(e.forecast.series.values[0]) for e in result.entries]
        actuals = [float(e.actual.values[0]) for e in result.entries]
        assert preds == [2.0, 3.0]
        assert actuals == [3.0, 4.0]

    def test_no_history_issue_skipped_with_warning(self):
        series = make_series([1.0, 2.0], resolution=HOURLY)
        result = backtest(PersistenceForecaster(), series, [START], Horizon(length=3600))
        assert result.entries == []
        assert result.warning_count == 1

    def test_empty_schedule(self):
        series = make_series([1.0, 2.0], resolution=HOURLY)
        result = backtest(PersistenceForecaster(), series, [], Horizon(length=3600))
        assert result.entries == [] and result.skipped == []

    def test_window_past_end_rejected(self):
        series = make_series([1.0, 2.0], resolution=HOURLY)
        with pytest.raises(ScheduleOutOfRange):
            backtest(PersistenceForecaster(), series, [START + 3600], Horizon(length=2 * 3600))

    def test_schedule_must_ascend(self):
        series = make_series([1.0] * 4, resolution=HOURLY)
        with pytest.raises(ValueError):
            backtest(
                PersistenceForecaster(),
                series,
                [START + 2 * 3600, START + 3600],
                Horizon(length=3600),
            )


class TestNoLookahead:
    @pytest.mark.parametrize("name", sorted(BASELINES))
    def test_corrupting_future_changes_nothing(self, name, rng):
        for trial in range(20):
            n_days = int(rng.integers(2, 5))
            vals = rng.normal(100, 50, n_days * 24)
            mask = rng.uniform(size=len(vals)) > 0.05
            history = make_series(list(vals), resolution=HOURLY, mask=mask)
            issued = START + int(rng.integers(1, n_days)) * DAY
            horizon = Horizon(length=DAY)
            forecaster = BASELINES[name]()
            try:
                base = forecaster.fit(history).predict(issued, horizon)
            except (NoHistory, InsufficientHistory):
                continue
            corrupted = corrupt_at_or_after(history, issued, rng)
            again = forecaster.fit(corrupted).predict(issued, horizon)
            assert forecasts_equal(base, again)


class TestSignalCommutation:
    def test_persistence_commutes_with_thresholding(self, rng):
        # signal(persistence(x)) == persistence(signal(x)) on gap-free histories
        for _ in range(20):
            vals = rng.normal(5, 10, 48)
            history = make_series(vals, resolution=HOURLY, unit=Unit.USD_PER_MWH)
            issued = START + 24 * 3600
            threshold = float(rng.normal(5, 5))
            a = to_signal(persistence(history, issued, Horizon(length=DAY)), threshold=threshold)
            signal_series = Series(
                grid=history.grid,
                values=(history.values <= threshold).astype(float),
                unit=Unit.BOOLEAN01,
            )
            b = persistence(signal_series, issued, Horizon(length=DAY))
            assert np.array_equal(a.series.values, b.series.values)


class TestForecastDump:
    def test_csv_format(self, tmp_path):
        history = make_series([5.0, 1.0], unit=Unit.USD_PER_MWH)
        fc = persistence(history, START + 600, Horizon(length=600))
        path = tmp_path / "dump.csv"
        write_forecast_csv(path, [fc])
        lines = path.read_text().splitlines()
        assert lines[0] == "issued_at,target_time,value,signal_type"
        assert lines[1] == "2022-06-01T00:10:00Z,2022-06-01T00:10:00Z,1.0,regression"
