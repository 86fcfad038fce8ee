"""Exception hierarchy.

Every error raised on purpose by this package derives from ``McudiError`` so
callers (and the CLI) can map families of failures to exit codes.
"""


class McudiError(Exception):
    """Base class for all package errors."""


class SchemaError(McudiError):
    """Input columns do not match the declared dataset schema."""


class ConfigError(McudiError, ValueError):
    """A configuration value is missing or out of range."""


class DataError(McudiError, ValueError):
    """Input data cannot be used for the requested operation."""


class EmptyInputError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class SingleClassError(DataError):
    """Labels contain one class only, so a classifier or metric is undefined."""


class DimensionMismatchError(DataError):
    pass


class AlignmentError(DataError):
    """Per-period verdicts and ground truth do not cover the same periods."""


class NotFittedError(McudiError, AttributeError):
    pass
