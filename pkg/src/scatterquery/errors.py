"""Error hierarchy shared by the engine, CLI, and HTTP layer.

Every error carries a stable machine-readable ``code`` so the API layer can
map engine failures onto wire errors one-to-one.
"""

from __future__ import annotations


class ScatterQueryError(Exception):
    """Base class; ``code`` is the machine-readable error identifier."""

    code = "internal-error"

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


class ParseError(ScatterQueryError):
    code = "parse-error"

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message, {"row": row} if row is not None else {})
        self.row = row


class EmptyTableError(ScatterQueryError):
    code = "empty-table"


class UnknownAttributeError(ScatterQueryError):
    code = "unknown-attribute"


class PreconditionError(ScatterQueryError):
    code = "precondition-failed"


class CardinalityError(ScatterQueryError):
    code = "cardinality-error"


class EmptyAfterClipError(ScatterQueryError):
    code = "empty-after-clip"


class CannotDownsampleError(ScatterQueryError):
    code = "cannot-downsample"


class IncompatibleLevelError(ScatterQueryError):
    code = "incompatible-level"


class IncompatiblePyramidError(ScatterQueryError):
    code = "incompatible-pyramid"


class InvalidRegionError(ScatterQueryError):
    code = "invalid-region"


class InvalidWeightsError(ScatterQueryError):
    code = "invalid-weights"


class OracleScaleError(ScatterQueryError):
    code = "oracle-scale"


class ZeroDistributionError(ScatterQueryError):
    code = "undefined-distribution"


class NotFoundError(ScatterQueryError):
    code = "not-found"


class CapacityError(ScatterQueryError):
    code = "capacity-exceeded"


class InvalidQueryError(ScatterQueryError):
    code = "invalid-query"
