"""Exception taxonomy for curtailkit.

Every error raised by this package derives from CurtailkitError and is named
for the contract it enforces, so callers can catch narrowly.
"""


class CurtailkitError(Exception):
    """Base class for all curtailkit errors."""


# -- time grids and series ------------------------------------------------

class NonIntegerRatio(CurtailkitError):
    """Target resolution is not an integer multiple of the source resolution."""


class UpsampleRequested(CurtailkitError):
    """Resampling to a finer resolution is not supported."""


class ResolutionMismatch(CurtailkitError):
    """Two series must share a resolution but do not."""


class EmptyOverlap(CurtailkitError):
    """The intersection of two grids (or a resample span) contains no steps."""


class OffGrid(CurtailkitError):
    """A timestamp or duration does not land on the grid."""


class OutOfRange(CurtailkitError):
    """A requested window falls outside the covered grid."""


class BadBucket(CurtailkitError):
    """Time-of-day bucket width is incompatible with the series resolution."""


class UnitMismatch(CurtailkitError):
    """A series has the wrong unit for this operation."""


# -- ingest ----------------------------------------------------------------

class SchemaError(CurtailkitError):
    """A file header does not match the canonical schema."""


class ErrorBudgetExceeded(CurtailkitError):
    """Too many malformed rows; the parse was aborted."""


class DuplicateError(CurtailkitError):
    """Two records share the same (id, timestamp)."""


class OffGridTimestamp(CurtailkitError):
    """A record timestamp does not align with (or lies outside) the grid."""


class IoError(CurtailkitError):
    """A file could not be read or is not a recognized curtailkit file."""


class VersionError(CurtailkitError):
    """A canonical file declares an unsupported format version."""


# -- detect ------------------------------------------------------------------

class GridMismatch(CurtailkitError):
    """Series that must share one grid do not."""


class EmptySet(CurtailkitError):
    """An operation over a set of series received none."""


class EmptyBins(CurtailkitError):
    """No calibration bin reached the minimum sample count."""


class TooFewBins(CurtailkitError):
    """Threshold extraction needs at least two calibrated bins."""


class BadEdges(CurtailkitError):
    """Bin edges must be non-empty and strictly ascending."""


# -- forecast ----------------------------------------------------------------

class NoHistory(CurtailkitError):
    """No observation exists before the forecast issue time."""


class InsufficientHistory(CurtailkitError):
    """History does not cover the span a forecaster requires."""


class AlreadyDiscrete(CurtailkitError):
    """Signal conversion applies to regression forecasts only."""


class ScheduleOutOfRange(CurtailkitError):
    """A backtest issue time or its horizon is not covered by the series."""


# -- evaluate ------------------------------------------------------------------

class WindowNotCovered(CurtailkitError):
    """Forecast or actuals do not cover the requested evaluation window."""


class ActualGaps(CurtailkitError):
    """The actual series has gaps inside the evaluation window."""


class CTooLarge(CurtailkitError):
    """The usage duration selects more steps than the window provides."""


class NoOverlap(CurtailkitError):
    """No jointly observed steps exist between forecast and actuals."""


class EmptyInput(CurtailkitError):
    """An aggregation received nothing to aggregate."""


# -- cli ------------------------------------------------------------------------

class FlagOnlyIso(CurtailkitError):
    """Calibration needs curtailment MW; this ISO reports only flags/percent."""


class MissingData(CurtailkitError):
    """Catalog data required by a command is absent."""


class UnknownKind(CurtailkitError):
    """Unrecognized plot kind."""


class ConfigError(CurtailkitError):
    """Run configuration is invalid or references missing paths."""
