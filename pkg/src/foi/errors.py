"""Exception hierarchy.

``ValidationError`` subclasses signal bad input (CLI exit code 1); every
other ``FoiError`` is a computational failure (exit code 2).
"""


class FoiError(Exception):
    pass


class ValidationError(FoiError, ValueError):
    pass


# -- ingestion -------------------------------------------------------------

class UnknownIndicatorColumn(ValidationError):
    pass


class DuplicateCountry(ValidationError):
    pass


class NonNumericCell(ValidationError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {value!r}")


class ColumnTooSparse(ValidationError):
    pass


class FixtureCorrupt(FoiError):
    pass


# -- rescaling -------------------------------------------------------------

class DegenerateRange(ValidationError):
    pass


class NoIndicatorsForIndex(ValidationError):
    pass


# -- statistics ------------------------------------------------------------

class TooFewPairs(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


class InvalidN(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class NotPositiveSemidefinite(ValidationError):
    pass


class NoConvergence(FoiError):
    pass


class SingularMatrix(FoiError):
    pass


class KmoUndefined(FoiError):
    pass


# -- clustering ------------------------------------------------------------

class MissingCoordinate(ValidationError):
    pass


class InvalidK(ValidationError):
    pass


class LabelMismatch(ValidationError):
    pass


# -- OECD client -----------------------------------------------------------

class NetworkError(FoiError):
    pass


class HttpStatusError(FoiError):
    def __init__(self, status: int, url: str):
        self.status = status
        self.url = url
        super().__init__(f"HTTP {status} for {url}")


class MalformedResponse(FoiError):
    pass


class UnknownDimension(FoiError):
    pass


# -- pipeline --------------------------------------------------------------

class IncompleteIndices(ValidationError):
    pass


class StageError(FoiError):
    """Wraps a failure inside a pipeline stage, keeping the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
