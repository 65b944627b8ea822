"""curtailkit: renewable-curtailment detection, forecasting, and evaluation
built on nodal locational marginal price (LMP) data.

The package is organized as:

* :mod:`curtailkit.timeseries` — grids, gap-aware series, resampling,
  alignment, windowing, time-of-day profiles.
* :mod:`curtailkit.ingest` — ISO dataset descriptors, canonical CSV and
  columnar-cache formats, raw-file adapters, catalogs.
* :mod:`curtailkit.detect` — min-LMP series, calibration curves, threshold
  extraction, boolean/binned signals, heatmap statistics.
* :mod:`curtailkit.forecast` — baseline forecasters and the rolling-origin
  backtest harness with a structural no-lookahead guarantee.
* :mod:`curtailkit.evaluate` — load-shifting impact metric with
  immediate/random/oracle baselines, plus regression and classification
  metrics.
* :mod:`curtailkit.cli` — the ``curtailkit`` command-line pipeline.
"""

from .detect import (
    CalibrationCurve,
    DetectionSignal,
    NodeHeatmapStats,
    ThresholdResult,
    below_threshold_heatmap,
    bin_signal,
    calibration_curve,
    detect,
    extract_threshold,
    min_lmp_series,
)
from .errors import CurtailkitError
from .evaluate import (
    Direction,
    ErrorMetrics,
    ImpactReport,
    LoadShiftSpec,
    SweepReport,
    classification_metrics,
    load_shift_impact,
    regression_metrics,
    sweep,
)
from .forecast import (
    BacktestEntry,
    BacktestResult,
    ClimatologyForecaster,
    DayAheadPersistenceForecaster,
    Forecaster,
    ForecastSeries,
    Horizon,
    PersistenceForecaster,
    SignalType,
    backtest,
    climatology,
    day_ahead_persistence,
    persistence,
    to_signal,
)
from .ingest import (
    Catalog,
    CurtailmentRecord,
    DatasetEntry,
    Iso,
    IsoDescriptor,
    LmpRecord,
    PayloadKind,
    ReportedKind,
    RowError,
    derive_curtailment_mw,
    descriptor_for,
    load_catalog,
    parse_curtailment,
    parse_lmp,
    read_canonical,
    to_series,
    write_canonical,
)
from .timeseries import (
    FIVE_MIN,
    HOURLY,
    Resolution,
    Series,
    TimeGrid,
    TimeOfDayProfile,
    Unit,
    align,
    format_rfc3339,
    parse_rfc3339,
    resample,
    time_of_day_profile,
    window,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestEntry",
    "BacktestResult",
    "CalibrationCurve",
    "Catalog",
    "ClimatologyForecaster",
    "CurtailkitError",
    "CurtailmentRecord",
    "DatasetEntry",
    "DayAheadPersistenceForecaster",
    "DetectionSignal",
    "Direction",
    "ErrorMetrics",
    "FIVE_MIN",
    "Forecaster",
    "ForecastSeries",
    "HOURLY",
    "Horizon",
    "ImpactReport",
    "Iso",
    "IsoDescriptor",
    "LmpRecord",
    "LoadShiftSpec",
    "NodeHeatmapStats",
    "PayloadKind",
    "PersistenceForecaster",
    "ReportedKind",
    "Resolution",
    "RowError",
    "Series",
    "SignalType",
    "SweepReport",
    "ThresholdResult",
    "TimeGrid",
    "TimeOfDayProfile",
    "Unit",
    "align",
    "backtest",
    "below_threshold_heatmap",
    "bin_signal",
    "calibration_curve",
    "classification_metrics",
    "climatology",
    "day_ahead_persistence",
    "derive_curtailment_mw",
    "descriptor_for",
    "detect",
    "extract_threshold",
    "format_rfc3339",
    "load_catalog",
    "load_shift_impact",
    "min_lmp_series",
    "parse_curtailment",
    "parse_lmp",
    "parse_rfc3339",
    "persistence",
    "read_canonical",
    "regression_metrics",
    "resample",
    "sweep",
    "time_of_day_profile",
    "to_series",
    "to_signal",
    "window",
    "write_canonical",
]
