from itertools import combinations

import numpy as np
import pytest

from curtailkit import (
    Direction,
    Horizon,
    LoadShiftSpec,
    Unit,
    classification_metrics,
    load_shift_impact,
    regression_metrics,
    sweep,
)
from curtailkit.errors import (
    ActualGaps,
    CTooLarge,
    EmptyInput,
    NoOverlap,
    UnitMismatch,
    WindowNotCovered,
)
from curtailkit.forecast import BacktestEntry, ForecastSeries

from conftest import START, make_series


def spec(w_steps, k_steps, *, t=START, res=300, **kw):
    return LoadShiftSpec(t=t, w=w_steps * res, c=k_steps * res, **kw)


def as_forecast(series, issued_at=None):
    issued = issued_at if issued_at is not None else series.grid.start
    return ForecastSeries(
        issued_at=issued,
        horizon=Horizon(lead=series.grid.start - issued,
                        length=series.grid.length * series.grid.resolution.seconds),
        series=series,
    )


def bruteforce_best_k_mean(values, k, best=True):
    means = [np.mean([values[i] for i in combo]) for combo in combinations(range(len(values)), k)]
    return max(means) if best else min(means)


class TestLoadShiftImpact:
    def test_perfect_forecast_example(self):
        actual = make_series([0.0, 10.0, 20.0, 30.0])
        report = load_shift_impact(actual, actual, spec(4, 2))
        assert report.forecast_impact == pytest.approx(25.0)
        assert report.immediate_baseline == pytest.approx(5.0)
        assert report.random_baseline == pytest.approx(15.0)
        assert report.oracle_impact == pytest.approx(25.0)
        assert list(report.selected_steps) == [2, 3]
        # Brute force over all 2-subsets confirms 25 is maximal.
        assert bruteforce_best_k_mean([0, 10, 20, 30], 2) == 25.0

    def test_constant_actual(self):
        actual = make_series([7.0] * 6)
        report = load_shift_impact(actual, actual, spec(6, 2))
        for value in (
            report.forecast_impact,
            report.immediate_baseline,
            report.random_baseline,
            report.oracle_impact,
            report.anti_oracle_impact,
        ):
            assert value == pytest.approx(7.0)

    def test_anticorrelated_forecast_hits_anti_oracle(self):
        actual = make_series([0.0, 10.0, 20.0, 30.0])
        forecast = make_series([-v for v in [0.0, 10.0, 20.0, 30.0]])
        report = load_shift_impact(forecast, actual, spec(4, 2))
        assert report.forecast_impact == pytest.approx(5.0)
        assert report.forecast_impact == pytest.approx(report.anti_oracle_impact)

    def test_random_baseline_is_window_mean(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 30))
            vals = rng.normal(50, 30, n)
            actual = make_series(vals)
            report = load_shift_impact(actual, actual, spec(n, 1))
            manual_mean = float(sum(float(v) for v in vals) / n)
            assert report.random_baseline == pytest.approx(manual_mean, rel=1e-12)

    def test_price_forecast_selects_lowest(self):
        actual = make_series([0.0, 10.0, 20.0, 30.0])
        prices = make_series([40.0, 30.0, 2.0, 1.0], unit=Unit.USD_PER_MWH)
        report = load_shift_impact(prices, actual, spec(4, 2))
        assert report.direction is Direction.SELECT_MIN_VALUE
        assert list(report.selected_steps) == [2, 3]
        assert report.forecast_impact == pytest.approx(25.0)

    def test_ties_break_earlier(self):
        actual = make_series([1.0, 2.0, 3.0, 4.0])
        forecast = make_series([5.0, 5.0, 1.0, 5.0])
        report = load_shift_impact(forecast, actual, spec(4, 2))
        assert list(report.selected_steps) == [0, 1]

    def test_forecast_gaps_excluded(self):
        actual = make_series([0.0, 10.0, 20.0, 30.0])
        forecast = make_series([0.0, 10.0, None, 30.0])
        report = load_shift_impact(forecast, actual, spec(4, 2))
        assert list(report.selected_steps) == [1, 3]
        assert report.forecast_gap_count == 1

    def test_too_many_forecast_gaps(self):
        actual = make_series([0.0, 10.0, 20.0, 30.0])
        forecast = make_series([None, None, None, 30.0])
        with pytest.raises(CTooLarge):
            load_shift_impact(forecast, actual, spec(4, 2))

    def test_actual_gaps_rejected(self):
        actual = make_series([0.0, None, 20.0, 30.0])
        forecast = make_series([0.0, 10.0, 20.0, 30.0])
        with pytest.raises(ActualGaps):
            load_shift_impact(forecast, actual, spec(4, 2))

    def test_window_not_covered(self):
        actual = make_series([0.0, 10.0])
        with pytest.raises(WindowNotCovered):
            load_shift_impact(actual, actual, spec(4, 2))

    def test_contiguous_needs_gap_free_block(self):
        actual = make_series([0.0, 10.0, 20.0, 30.0])
        forecast = make_series([0.0, None, 20.0, None])
        with pytest.raises(CTooLarge):
            load_shift_impact(forecast, actual, spec(4, 2, contiguous=True))

    def test_contiguous_mode(self):
        actual = make_series([0.0, 10.0, 20.0, 5.0])
        report = load_shift_impact(actual, actual, spec(4, 2, contiguous=True))
        assert list(report.selected_steps) == [1, 2]
        assert report.forecast_impact == pytest.approx(15.0)
        assert report.oracle_impact == pytest.approx(15.0)  # best contiguous block
        assert report.anti_oracle_impact == pytest.approx(5.0)  # [0, 10]

    def test_bounds_vs_bruteforce(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 20))
            k = int(rng.integers(1, min(5, n) + 1))
            actual_vals = rng.normal(0, 100, n)
            forecast_vals = rng.normal(0, 100, n)
            actual = make_series(actual_vals)
            forecast = make_series(forecast_vals)
            report = load_shift_impact(forecast, actual, spec(n, k))
            oracle = bruteforce_best_k_mean(actual_vals, k, best=True)
            anti = bruteforce_best_k_mean(actual_vals, k, best=False)
            assert report.oracle_impact == pytest.approx(oracle)
            assert report.anti_oracle_impact == pytest.approx(anti)
            assert anti - 1e-9 <= report.forecast_impact <= oracle + 1e-9
            assert anti - 1e-9 <= report.random_baseline <= oracle + 1e-9
            assert anti - 1e-9 <= report.immediate_baseline <= oracle + 1e-9

    def test_selection_invariant_to_monotone_transform(self, rng):
        for transform in (lambda v: v + 100.0, lambda v: 3.0 * v, np.exp):
            vals = rng.normal(0, 3, 12)
            actual = make_series(rng.uniform(0, 100, 12))
            base = load_shift_impact(make_series(vals), actual, spec(12, 4))
            warped = load_shift_impact(make_series(transform(vals)), actual, spec(12, 4))
            assert list(base.selected_steps) == list(warped.selected_steps)

    def test_boolean_actuals_give_flag_fraction(self):
        actual = make_series([1.0, 0.0, 1.0, 1.0], unit=Unit.BOOLEAN01)
        forecast = make_series([9.0, 0.0, 8.0, 7.0])
        report = load_shift_impact(forecast, actual, spec(4, 2))
        assert report.unit is Unit.BOOLEAN01
        assert report.forecast_impact == pytest.approx(1.0)  # both selected steps flagged


class TestRegressionMetrics:
    def test_identity(self):
        s = make_series([1.0, 2.0, 3.0])
        m = regression_metrics(s, s)
        assert m.mae == 0.0 and m.rmse == 0.0

    def test_constant_offset(self):
        actual = make_series([1.0, 2.0, 3.0])
        forecast = make_series([2.0, 3.0, 4.0])
        m = regression_metrics(forecast, actual)
        assert m.mae == pytest.approx(1.0)
        assert m.rmse == pytest.approx(1.0)

    def test_hand_computed_pair(self):
        actual = make_series([0.0, 2.0])
        forecast = make_series([0.0, 0.0])
        m = regression_metrics(forecast, actual)
        assert m.mae == pytest.approx(1.0)
        assert m.rmse == pytest.approx(np.sqrt(2.0))

    def test_rmse_at_least_mae(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 50))
            a = make_series(rng.normal(0, 10, n))
            f = make_series(rng.normal(0, 10, n))
            m = regression_metrics(f, a)
            assert m.rmse >= m.mae >= 0.0

    def test_no_overlap(self):
        a = make_series([1.0, None], mask=[True, False])
        f = make_series([None, 1.0], mask=[False, True])
        with pytest.raises(NoOverlap):
            regression_metrics(f, a)

    def test_unit_mismatch(self):
        with pytest.raises(UnitMismatch):
            regression_metrics(make_series([1.0]), make_series([1.0], unit=Unit.USD_PER_MWH))


def bool_series(bits):
    return make_series([float(b) for b in bits], unit=Unit.BOOLEAN01)


class TestClassificationMetrics:
    def test_identity_with_positives(self):
        s = bool_series([1, 0, 1])
        m = classification_metrics(s, s)
        assert m.precision == 1.0 and m.recall == 1.0 and m.accuracy == 1.0

    def test_hand_confusion(self):
        pred = bool_series([1, 1, 0, 0])
        actual = bool_series([1, 0, 1, 0])
        m = classification_metrics(pred, actual)
        assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)
        assert m.precision == 0.5 and m.recall == 0.5

    def test_zero_over_zero_reported_absent(self):
        pred = bool_series([0, 0, 0])
        actual = bool_series([1, 0, 1])
        m = classification_metrics(pred, actual)
        assert m.recall == 0.0
        assert m.precision is None
        assert m.f1 is None

    def test_needs_boolean_signals(self):
        with pytest.raises(UnitMismatch):
            classification_metrics(make_series([1.0]), bool_series([1]))


class TestSweep:
    def entry(self, actual_vals, forecast_vals=None):
        actual = make_series(actual_vals)
        forecast_vals = forecast_vals if forecast_vals is not None else actual_vals
        fc = as_forecast(make_series(forecast_vals))
        return BacktestEntry(issued_at=actual.grid.start, forecast=fc, actual=actual)

    def test_single_window_equals_report(self):
        entry = self.entry([0.0, 10.0, 20.0, 30.0])
        relative = LoadShiftSpec(t=None, w=4 * 300, c=2 * 300)
        report = sweep([entry], [relative])
        direct = load_shift_impact(entry.forecast, entry.actual, spec(4, 2))
        assert report.rows[0].forecast_impact == pytest.approx(direct.forecast_impact)
        assert report.rows[0].n_windows == 1

    def test_mean_across_windows(self):
        # Oracle impacts 10 and 20 across the two windows: aggregate 15.
        e1 = self.entry([10.0, 10.0])
        e2 = self.entry([20.0, 20.0])
        report = sweep([e1, e2], [LoadShiftSpec(t=None, w=600, c=300)])
        assert report.rows[0].forecast_impact == pytest.approx(15.0)

    def test_uplift_ratios(self):
        e = self.entry([0.0, 10.0, 20.0, 30.0])
        report = sweep([e], [LoadShiftSpec(t=None, w=4 * 300, c=2 * 300)])
        row = report.rows[0]
        assert row.uplift_vs_random == pytest.approx(25.0 / 15.0)
        assert row.uplift_vs_immediate == pytest.approx(25.0 / 5.0)

    def test_empty_inputs(self):
        e = self.entry([1.0, 2.0])
        with pytest.raises(EmptyInput):
            sweep([e], [])
        with pytest.raises(EmptyInput):
            sweep([], [LoadShiftSpec(t=None, w=600, c=300)])

    def test_unfitting_spec_counted_skipped(self):
        e = self.entry([1.0, 2.0])
        fits = LoadShiftSpec(t=None, w=600, c=300)
        too_big = LoadShiftSpec(t=None, w=86400, c=300)
        report = sweep([e], [fits, too_big])
        assert report.skipped_windows == 1
        assert len(report.rows) == 1


class TestSpecValidation:
    def test_c_bounds(self):
        with pytest.raises(ValueError):
            LoadShiftSpec(t=START, w=600, c=0)
        with pytest.raises(ValueError):
            LoadShiftSpec(t=START, w=600, c=900)
