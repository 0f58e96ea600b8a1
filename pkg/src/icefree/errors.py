"""Exception hierarchy shared by all modules.

The CLI maps the three top-level families onto process exit codes:
``DataError`` -> 2, ``NumericError`` -> 3. Usage problems exit with 1.
"""

from __future__ import annotations


class IcefreeError(Exception):
    """Base class for every error raised by this package."""


class DataError(IcefreeError):
    """Input data is malformed, incomplete or out of range."""


class DataFormatError(DataError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class GapError(DataError):
    def __init__(self, missing: list):
        self.missing = list(missing)
        shown = ", ".join(str(m) for m in self.missing[:12])
        more = "" if len(self.missing) <= 12 else f" (+{len(self.missing) - 12} more)"
        super().__init__(f"non-contiguous months, missing stamps: {shown}{more}")


class InsufficientDataError(DataError):
    pass


class RangeError(DataError):
    pass


class SpecificationError(IcefreeError):
    """A request is inconsistent with the model specification."""


class NumericError(IcefreeError):
    """Numerical failure during estimation or simulation."""


class EstimationError(NumericError):
    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)


class RankError(NumericError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"design matrix is rank deficient at column {column!r}")


class CovarianceError(NumericError):
    pass
