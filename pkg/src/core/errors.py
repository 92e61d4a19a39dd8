from typing import Iterable, Optional


class ShiftwiseError(Exception):
    """Base class for every error raised by shiftwise"""
    pass


class UserInputError(ShiftwiseError):
    """Raised when user supplied files or flags are unusable (exit code 2)"""
    pass


class ConfigError(UserInputError):
    """Raised when a household or run configuration is invalid"""
    pass


class IngestError(UserInputError):
    """Raised when a raw consumption or price file cannot be ingested"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class EmptyFileError(IngestError):
    """Raised when a file holds no data rows"""
    pass


class ChannelMismatchError(IngestError):
    """Raised when the CSV header does not carry the configured channels"""
    pass


class NonMonotonicTimestampsError(IngestError):
    """Raised when timestamps go backwards (duplicates excepted)"""
    pass


class InvalidPriceError(IngestError):
    """Raised when a price is NaN or a timestamp is not an hour start"""
    pass


class CacheMissingError(UserInputError):
    """Raised when a command needs a prepared dataset that was never ingested"""
    pass


class DateOutOfRangeError(UserInputError):
    """Raised when a requested date lies outside the prepared coverage"""
    pass


class InsufficientHistoryError(ShiftwiseError):
    """Raised when lag features reach before the available history"""
    pass


class SingleClassError(ShiftwiseError):
    """Raised when a metric needs both label classes but only one is present"""
    pass


class DimensionMismatchError(ShiftwiseError):
    """Raised when a feature vector does not match the model dimension"""
    pass


class NoRunsError(ShiftwiseError):
    """Raised when a metric over usage runs receives none"""
    pass


class ZeroReferenceError(ShiftwiseError):
    """Raised when the reference profile of a normalized distance is all zeros"""
    pass


class NoHistoryError(ShiftwiseError):
    """Raised when a device has no usage run before the cutoff date"""
    pass


class MissingProfileError(ShiftwiseError):
    """Raised when a shiftable device has no typical load profile yet"""
    pass


class NoActualRunError(ShiftwiseError):
    """Raised when a recommendation day has no actual run to compare against"""
    pass


class IncompleteCoverageError(ShiftwiseError):
    """Raised when the price curve lacks hours needed for a recommendation day"""

    def __init__(self, missing: Iterable) -> None:
        self.missing = tuple(missing)
        shown = ", ".join(str(stamp) for stamp in self.missing[:6])
        more = f" (+{len(self.missing) - 6} more)" if len(self.missing) > 6 else ""
        super().__init__(f"Price curve is missing hours: {shown}{more}")
