"""Exception types shared across the package.

Each one maps onto a CLI exit code (see ``sdrnet.cli``).
"""


class SDRNetError(Exception):
    """Base class for all package errors."""


class ConfigError(SDRNetError, ValueError):
    """Invalid configuration; the message names the violated constraint."""


class InvalidArgumentError(SDRNetError, ValueError):
    pass


class ResourceLimitError(SDRNetError, RuntimeError):
    """A requested computation exceeds a configured size cap."""


class ShapeError(SDRNetError, ValueError):
    pass


class DataError(SDRNetError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingDivergedError(SDRNetError, RuntimeError):
    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record or {}
