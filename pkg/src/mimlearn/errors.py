"""Semantic exception hierarchy.

Every failure mode callers are expected to handle gets its own class so that
tests and the CLI can react precisely instead of string-matching messages.
"""


class MimError(Exception):
    """Base class for all library errors."""


class ContractViolation(MimError, ValueError):
    """An input broke a documented precondition (shape, finiteness, range)."""


class ConfigError(MimError, ValueError):
    """A configuration value or experiment config file is invalid."""


class DegeneratePartitionError(MimError):
    """A partition was requested over a zero-dimensional subspace."""


class EmptyPartitionError(MimError):
    """No sample landed inside any cube of the partition."""


class EmptyDatasetError(MimError):
    """An operation that needs at least one sample got none."""


class RankDeficientError(MimError):
    """Normal equations are singular and no ridge was requested."""


class DegeneratePolynomialError(MimError):
    """Normalization was asked of an (almost) constant polynomial."""


class DataExhaustedError(MimError):
    """The training data source ran out of fresh batches."""


class BasisCapExceededError(MimError):
    """The discovered subspace grew past the configured cap."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InfeasibleFamilyError(MimError):
    """Rejection sampling could not build the requested matrix family."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


class OracleRefusalError(MimError):
    """A brute-force oracle refused an instance too large to enumerate."""
