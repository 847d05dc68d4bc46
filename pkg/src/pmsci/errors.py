"""Exception hierarchy.

Every error raised on bad input data derives from :class:`DataError`, which
the CLI maps to exit code 1.
"""


class DataError(ValueError):
    """Input data cannot be processed."""


class ImageFormatError(DataError):
    """File is unreadable, empty, or not a supported image format."""


class ImageTooSmallError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class FingerprintFormatError(DataError):
    """File is not a fingerprint file, or is truncated / of another version."""


class ConstantInputError(DataError):
    """Correlation requested against a matrix with zero variance."""
