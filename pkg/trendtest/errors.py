"""Exceptions raised by trendtest."""


class TrendTestError(Exception):
    """Base class for all trendtest errors."""


class DatasetError(TrendTestError, ValueError):
    """Raw measurements could not be turned into a valid dataset."""


class NoComparablePairsError(TrendTestError):
    """Every adjacent level pair touches an empty sub-sample."""


class TableError(TrendTestError, ValueError):
    """A frequency table is internally inconsistent."""


class SizeCapError(TrendTestError, ValueError):
    """An exact enumeration was requested for sizes beyond its cap."""
