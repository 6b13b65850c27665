"""Exception hierarchy for clate."""


class ClateError(Exception):
    """Base class for every error raised by clate."""


class ModelValidationError(ClateError, ValueError):
    """A model violates a structural invariant (supports, masses, maps)."""


class OrderedModelError(ClateError, ValueError):
    """A binary-only operation received a model with more than two levels."""


class DegenerateCellError(ClateError, ValueError):
    """Some propensity pi(z, x) equals 0 or 1."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class IndependenceError(ClateError, ValueError):
    """A raw joint does not factor as P(x, z) P(type, outcomes | x)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RankInvarianceError(ClateError):
    """Propensity orderings of the instrument disagree across covariate cells."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class AnchorNotStrictError(ClateError):
    """The anchor cell ties instrument values that the merged order separates."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class MonotonicityError(ClateError):
    """The model is not globally monotone, so no separable index exists.

    ``verdict`` holds the classification that failed (when available) and
    ``level`` the binarization level for ordered models.
    """

    def __init__(self, message, verdict=None, witnesses=(), level=None):
        super().__init__(message)
        self.verdict = verdict
        self.witnesses = tuple(witnesses)
        self.level = level


class NonThresholdTypeError(ClateError, AssertionError):
    """A response type is not a threshold rule in the constructed index."""


class AmbiguousIndexError(ClateError):
    """Two instrument values share E[D_z] but have different level laws."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ShapeError(ClateError, ValueError):
    """Model and representation are defined over different supports."""


class NegativityError(ClateError, ValueError):
    """A test function takes a negative value."""


class LevelRangeError(ClateError, ValueError):
    """Binarization level outside 1..K-1."""


class GenerationExhaustedError(ClateError, RuntimeError):
    """The generator could not certify a model within its retry budget."""


class IngestionError(ClateError):
    """Base class for input-file problems."""


class ParseError(IngestionError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(IngestionError, ValueError):
    pass


class ContinuousOutcomeError(IngestionError, ValueError):
    pass
