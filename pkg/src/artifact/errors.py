"""Exception types shared across the package.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch one thing.
"""


class ArtifactError(ValueError):
    """Base class for all errors raised by this package."""


class ZeroInverse(ArtifactError):
    pass


class FieldMismatch(ArtifactError):
    pass


class DuplicatePoint(ArtifactError):
    pass


class ZeroPoint(ArtifactError):
    pass


class BadParams(ArtifactError):
    pass


class TooLarge(ArtifactError):
    pass


class LengthMismatch(ArtifactError):
    pass


class NotUnitary(ArtifactError):
    pass


class BadTargets(ArtifactError):
    pass


class NotBijective(ArtifactError):
    pass


class DimMismatch(ArtifactError):
    pass


class NotNested(ArtifactError):
    pass


class BadLogical(ArtifactError):
    pass


class OutsideCode(ArtifactError):
    pass


class NotTransversal(ArtifactError):
    pass


class Unsupported(ArtifactError):
    pass


class BadDegree(ArtifactError):
    pass


class NonClifford(ArtifactError):
    pass


class ForeignGate(ArtifactError):
    pass


class AboveThreshold(ArtifactError):
    pass


class EmptyTable(ArtifactError):
    pass


class ArityTooHigh(ArtifactError):
    pass
