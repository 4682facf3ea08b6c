"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


class DataError(Exception):
    """Problem reading or preparing benchmark data."""


class IdxFormatError(DataError):
    """Malformed IDX file; carries the offending path and byte offset."""

    def __init__(self, path, offset, message):
        super().__init__(f"{path} (offset {offset}): {message}")
        self.path = str(path)
        self.offset = offset


class InsufficientDataError(DataError, ValueError):
    """Not enough examples per class to honor the requested task split."""


class EmptyBufferError(RuntimeError):
    """Operation requires a non-empty memory buffer."""


class IncompleteRunError(RuntimeError):
    """Metric requested before the result rows it needs were recorded."""


class UndefinedMetricError(RuntimeError):
    """Metric has no definition for this matrix shape (single task)."""


class NumericError(RuntimeError):
    """Training produced a non-finite loss or parameter."""
