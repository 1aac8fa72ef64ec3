"""Probability bracket notation as executable numerics."""

from .core import (
    Observable,
    ProductSpace,
    SampleSpace,
    bayes,
    condition,
    conditional_expectation,
    expectation,
    fair_die,
    joint_expectation,
    p_bracket,
    probability,
)
from .errors import (
    ConditioningOnNullError,
    ConfigurationError,
    CorpusParseError,
    DimensionError,
    EmptyDocumentError,
    ModelError,
    NonInvertiblePropagatorError,
    NormalizationError,
    PBNError,
    TimeOrderingError,
    TruncationWarning,
    UnknownIdError,
)
from .markov import Generator, StochasticMatrix, SystemPKet

__version__ = "0.1.0"
