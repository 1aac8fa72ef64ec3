"""Exception and warning types raised across the package."""


class PBNError(ValueError):
    """Base class for all domain errors."""


class NormalizationError(PBNError):
    """Masses or amplitudes do not sum to one within tolerance."""


class ConditioningOnNullError(PBNError):
    """Conditioning on an event of zero probability."""


class DimensionError(PBNError):
    """Shapes of operands do not agree."""


class TimeOrderingError(PBNError):
    """A time argument is negative or intervals are not ordered."""


class ConfigurationError(PBNError):
    """Numerical setup (grid, step size) is invalid."""


class NonInvertiblePropagatorError(PBNError):
    """The evolution operator has no inverse."""


class ModelError(PBNError):
    """Model input violates a structural assumption (e.g. commuting pair)."""


class CorpusParseError(PBNError):
    """Malformed corpus file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDocumentError(PBNError):
    """A document has no positive counts."""


class UnknownIdError(PBNError, KeyError):
    """Unknown document or term identifier."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class TruncationWarning(UserWarning):
    """Quadrature domain or truncated basis drops probability mass."""


class NegativeMassWarning(UserWarning):
    """Evolved masses fell below zero beyond round-off and were clamped."""
