"""Exception types raised across the toolkit.

Everything derives from ValueError so callers that only care about
"bad input" can catch one thing, while tests and the CLI can name the
specific failure kind.
"""

from __future__ import annotations


class TamperkitError(ValueError):
    """Base class for all toolkit-specific errors."""


class InvalidInputError(TamperkitError):
    """Malformed argument: wrong shape, dtype, range, or missing field."""


class DegeneratePoseError(TamperkitError):
    """Cuboid pose that cannot be projected (corner at or behind the camera)."""


class UnsupportedViewError(TamperkitError):
    """Projection does not show exactly three faces of the cuboid."""


class AmbiguousOrderingError(TamperkitError):
    """Corner ordering tie (e.g. two candidates share the same x within tolerance)."""


class DegenerateFaceError(TamperkitError):
    """Face quad too small or self-intersecting to rectify."""


class DegenerateConfigurationError(TamperkitError):
    """Point configuration unusable for homography estimation (e.g. 3 collinear)."""


class OutOfBoundsError(TamperkitError):
    """Quad corner outside the source image bounds; message lists offenders."""


class InvalidPairError(TamperkitError):
    """Side pair views disagree in size or channel count."""


class DegenerateTrainingError(TamperkitError):
    """Training set with a single class: no stump can be fit."""


class MissingReferenceError(TamperkitError):
    """No reference view stored for the requested parcel face."""


class IncompleteTextureError(TamperkitError):
    """Reference captures do not cover all five relevant faces."""


class AnnotationError(InvalidInputError):
    """Annotation record failed schema or ordering validation.

    Carries enough context (record index + field path) to locate the
    offending entry in the source file.
    """

    def __init__(self, message: str, record_index: int | None = None, field: str | None = None):
        prefix = ""
        if record_index is not None:
            prefix += f"record[{record_index}]"
        if field:
            prefix += f".{field}" if prefix else field
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.record_index = record_index
        self.field = field
