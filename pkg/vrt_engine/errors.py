"""Exception hierarchy for the retrieval engine."""


class VrtError(Exception):
    """Base class for every engine error."""


# Numeric / shape errors

class DimensionMismatch(VrtError, ValueError):
    """Vectors or stores disagree on dimensionality."""


DimMismatch = DimensionMismatch


class ZeroVector(VrtError, ValueError):
    """A vector with zero L2 norm where a direction is required."""


class IndexOutOfRange(VrtError, IndexError):
    """An index outside the valid range of a sequence."""


class NonPositiveTemperature(VrtError, ValueError):
    """Softmax temperature must be strictly positive."""


# Store / index errors

class StoreIOError(VrtError, OSError):
    """Underlying file I/O failed while reading or writing a store."""


class BadMagic(VrtError, ValueError):
    """File does not start with the VRTEMB01 magic."""


class TruncatedFile(VrtError, ValueError):
    """File ended before the declared records were read."""


class DuplicateId(VrtError, ValueError):
    """An id appears more than once in a store or index."""


class EmptyCorpus(VrtError, ValueError):
    """An index cannot be built from zero items."""


# Sampling errors

class CorpusTooSmall(VrtError, ValueError):
    """Not enough ids to draw a negative that differs from the ground truth."""


class NoValidNegative(VrtError, ValueError):
    """Every candidate in the mining range equals the ground truth."""


# Provider / scorer errors

class ProviderError(VrtError):
    """Base class for embedding provider failures."""


class ProviderUnavailable(ProviderError):
    """Remote provider unreachable (timeouts or 5xx after retries)."""


class MalformedResponse(ProviderError):
    """Remote provider answered with an unusable payload."""


class UnknownPrompt(ProviderError, KeyError):
    """Prompt id not present in the registry."""


class UnresolvableItem(ProviderError, KeyError):
    """Provider cannot produce an embedding for the requested item."""


class ScorerUnavailable(VrtError):
    """No scorer configured, or the remote scorer cannot be reached."""


class ScoreOutOfRange(VrtError, ValueError):
    """Scorer emitted a value outside [0, 1]."""


# Training errors

class DivergedLoss(VrtError, ArithmeticError):
    """Training produced a non-finite loss."""


# Input validation

class EmptyInput(VrtError, ValueError):
    """A required input sequence or string is empty."""


class InvalidSegment(VrtError, ValueError):
    """Planted segment does not fit the signal or overlaps another."""


class MissingGroundTruth(VrtError, KeyError):
    """A query has no ground-truth entry."""


class InvalidConfig(VrtError, ValueError):
    """Configuration values or keys are invalid."""


class InvalidVector(VrtError, ValueError):
    """Vector has non-finite entries or a false normalized flag."""
