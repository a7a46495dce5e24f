"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class TrainingError(RuntimeError):
    """Raised when training diverges.

    ``weights`` holds the last parameter set whose loss was finite and
    ``log`` the epochs completed before the failure.
    """

    def __init__(self, message, weights=None, log=None):
        super().__init__(message)
        self.weights = weights
        self.log = log if log is not None else []


class FormatError(ValueError):
    """Base class for model/dataset file parse errors."""

    def __init__(self, message, field=None, offset=None):
        super().__init__(message)
        self.field = field
        self.offset = offset


class UnsupportedCellError(FormatError):
    pass


class MissingFieldError(FormatError):
    pass


class DimensionMismatchError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass
