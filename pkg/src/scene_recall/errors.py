"""Exception taxonomy shared by all scene_recall modules.

Every error raised by the library derives from SceneRecallError so callers
(and the CLI) can catch one base class. Class names mirror the failure they
report; messages carry the offending values.
"""

from __future__ import annotations


class SceneRecallError(Exception):
    """Base class for all scene_recall errors."""


# File-system failures surface as the platform exception; the alias gives
# callers one name to catch alongside the package's own errors.
IoError = OSError


# -- schema / annotations ------------------------------------------------


class SchemaError(SceneRecallError):
    """Schema definition or schema file violates an invariant."""


class LengthMismatch(SceneRecallError):
    """Annotation value count does not match the schema attribute count."""


class UnknownClassId(SceneRecallError):
    """A value is not a legal class id for its attribute."""

    def __init__(self, attribute: str, value: int):
        super().__init__(f"attribute {attribute!r} has no class id {value}")
        self.attribute = attribute
        self.value = value


# -- embeddings ----------------------------------------------------------


class ZeroVector(SceneRecallError):
    """Cannot normalize a vector with zero L2 norm."""


class NonFiniteComponent(SceneRecallError):
    """Vector contains NaN or infinity."""


class NotNormalized(SceneRecallError):
    """Stored vector deviates from unit L2 norm beyond tolerance."""


class DuplicateFrameId(SceneRecallError):
    """Two records share a frame id."""


class UnknownModel(SceneRecallError):
    """Model name not present in the metadata registry."""


# -- file formats --------------------------------------------------------


class BadMagic(SceneRecallError):
    """File does not start with the expected magic bytes."""


class VersionUnsupported(SceneRecallError):
    """File declares a format version this build cannot read."""


class TruncatedFile(SceneRecallError):
    """File ends early, or carries bytes beyond the declared payload."""


# -- index / retrieval ---------------------------------------------------


class EmptySet(SceneRecallError):
    """Index construction needs at least one record."""


class DimensionMismatch(SceneRecallError):
    """Query dimension differs from the index dimension."""


class BadK(SceneRecallError):
    """k (or beam relative to k) is out of range."""


class InvalidParams(SceneRecallError):
    """Build or workload parameters are out of range."""


# -- classification ------------------------------------------------------


class EmptyBallot(SceneRecallError):
    """Majority vote over an empty label list."""


class MissingAnnotation(SceneRecallError):
    """An indexed frame id has no annotation record."""


class BatchItemError(SceneRecallError):
    """Wraps a per-item failure inside a batch, with its position."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"query {index}: {cause}")
        self.index = index
        self.cause = cause


# -- text codec ----------------------------------------------------------


class InvalidRecord(SceneRecallError):
    """Annotation record failed validation before encoding."""


class BudgetExceeded(SceneRecallError):
    """Estimated token count exceeds the text-encoder budget."""

    def __init__(self, estimate: int, budget: int):
        super().__init__(f"estimated {estimate} tokens exceeds budget {budget}")
        self.estimate = estimate
        self.budget = budget


class FieldCountMismatch(SceneRecallError):
    """Compact text field count differs from the schema attribute count."""


class NonIntegerField(SceneRecallError):
    """Compact text field is not a plain decimal integer."""


# -- evaluation ----------------------------------------------------------


class Misaligned(SceneRecallError):
    """Gold and predicted sequences differ in length or frame ids."""


class NoSupport(SceneRecallError):
    """Attribute has no evaluated frames, weights are undefined."""


# -- dataset pipeline ----------------------------------------------------


class DuplicateTrip(SceneRecallError):
    """Split file lists the same trip id twice."""


class SplitOverlap(SceneRecallError):
    """A trip id appears in both the train and test splits."""


class MissingFrame(SceneRecallError):
    """A scheduled frame lacks an annotation or an embedding."""
