"""Exception hierarchy shared across the package."""


class SkelactError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SkelactError):
    """Invalid or incomplete run configuration."""


class DataError(SkelactError):
    """Invalid input data (files, schemas, dataset indices)."""


class ParseError(DataError):
    """Malformed data file. Carries the 1-based offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"{message} (line {line_number})"
        super().__init__(message)
        self.line_number = line_number
