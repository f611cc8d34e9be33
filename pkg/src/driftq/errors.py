"""Exception hierarchy shared across the package."""


class DriftqError(Exception):
    """Base class for all errors raised by driftq."""


class ConfigError(DriftqError):
    """A configuration file or parameter set is invalid."""


class StreamOrderError(DriftqError):
    """Readings arrived with non-monotonic timestamps."""


class GridMismatchError(DriftqError):
    """Two histograms were compared on different bin grids."""


class MetricError(DriftqError):
    """A metric is undefined for the given inputs (e.g. zero-variance R^2)."""


class FitError(DriftqError):
    """An estimator could not be fitted on the given data."""


class WindowScoreError(DriftqError):
    """A dimension scorer cannot produce a value for this window."""

    def __init__(self, dimension: str, message: str):
        self.dimension = dimension
        super().__init__(f"{dimension}: {message}")


class StoreError(DriftqError):
    """The artifact store is missing, corrupt, or refused an operation."""


class DevelopmentError(DriftqError):
    """The development phase could not produce a valid artifact bundle."""
