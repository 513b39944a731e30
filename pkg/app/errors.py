"""Exception hierarchy shared by every stage of the engine.

All errors derive from :class:`ReidError` so the CLI can map the whole family
to the validation exit code in one place. It is not a ``ValueError``, so
raising one inside a pydantic validator propagates unchanged.
"""
from __future__ import annotations

from typing import Optional


class ReidError(Exception):
    """Base class for validation failures raised by the engine."""


class ConfigError(ReidError):
    pass


class InvalidParameter(ReidError):
    pass


# --- file formats ---
class MalformedHeader(ReidError):
    def __init__(self, expected: str, found: str) -> None:
        super().__init__(f"expected header {expected!r}, found {found!r}")
        self.expected = expected
        self.found = found


class MalformedRow(ReidError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


class BadTimestamp(ReidError):
    def __init__(self, line: int, raw: str) -> None:
        super().__init__(f"line {line}: bad timestamp {raw!r}")
        self.line = line
        self.raw = raw


class DuplicateImageId(ReidError):
    def __init__(self, image_id: str) -> None:
        super().__init__(f"duplicate image_id {image_id!r}")
        self.image_id = image_id


class UnknownImageId(ReidError):
    def __init__(self, image_id: str) -> None:
        super().__init__(f"unknown image_id {image_id!r}")
        self.image_id = image_id


class EmptyDataset(ReidError):
    def __init__(self, message: str = "dataset holds no records") -> None:
        super().__init__(message)


class BadMagic(ReidError):
    def __init__(self, found: bytes) -> None:
        super().__init__(f"bad magic {found!r}")
        self.found = found


class TruncatedPayload(ReidError):
    def __init__(self, expected: int, found: int) -> None:
        super().__init__(f"payload truncated: expected {expected} bytes, found {found}")
        self.expected = expected
        self.found = found


class NonFiniteValue(ReidError):
    def __init__(self, row: int, col: int) -> None:
        super().__init__(f"non-finite value at row {row}, col {col}")
        self.row = row
        self.col = col


class AsymmetricConflict(ReidError):
    def __init__(self, a: str, b: str) -> None:
        super().__init__(f"conflicting distances for camera pair ({a}, {b})")
        self.a = a
        self.b = b


class NonPositiveDistance(ReidError):
    def __init__(self, a: str, b: str, value: float) -> None:
        super().__init__(f"distance between {a} and {b} must be positive, got {value}")
        self.a = a
        self.b = b
        self.value = value


class MissingCameraDistance(ReidError):
    def __init__(self, a: str, b: str) -> None:
        super().__init__(f"no graph distance between cameras {a!r} and {b!r}")
        self.a = a
        self.b = b


# --- array shapes ---
class ShapeMismatch(ReidError):
    pass


class DimensionMismatch(ReidError):
    pass


class TooManyParts(ReidError):
    def __init__(self, n_parts: int, size: int, axis: str) -> None:
        super().__init__(f"cannot split {axis} of size {size} into {n_parts} parts")
        self.n_parts = n_parts
        self.size = size
        self.axis = axis


# --- losses ---
class BadEpsilon(ReidError):
    def __init__(self, epsilon: float) -> None:
        super().__init__(f"label smoothing epsilon must lie in [0, 1], got {epsilon}")
        self.epsilon = epsilon


class NoPositive(ReidError):
    def __init__(self, anchor: int) -> None:
        super().__init__(f"anchor {anchor} has no positive in the batch")
        self.anchor = anchor


class NoNegative(ReidError):
    def __init__(self, anchor: int) -> None:
        super().__init__(f"anchor {anchor} has no negative in the batch")
        self.anchor = anchor


# --- spatio-temporal ---
class NonPositiveInput(ReidError):
    pass


class NonPositiveSample(ReidError):
    pass


class DegenerateSample(ReidError):
    pass


class NoPositivePairs(ReidError):
    def __init__(self, message: str = "no same-identity cross-camera pairs") -> None:
        super().__init__(message)


# --- retrieval / evaluation ---
class BadK(ReidError):
    pass


class RankingMismatch(ReidError):
    def __init__(self, query_id: Optional[str], reason: str) -> None:
        prefix = f"query {query_id!r}: " if query_id is not None else ""
        super().__init__(prefix + reason)
        self.query_id = query_id


class NoValidQueries(ReidError):
    def __init__(self, message: str = "no query has a relevant gallery item") -> None:
        super().__init__(message)


class UsageError(ReidError):
    """Bad command-line usage (unknown flag, missing argument)."""
