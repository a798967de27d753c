"""Exception types shared across the toolkit.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific class that applies instead of bare ValueError.
"""


class ContourselError(Exception):
    """Base class for all toolkit errors."""


class InvalidProblemError(ContourselError):
    """Unsupported (kind, function, dimension) combination."""


class ContractError(ContourselError):
    """An argument violates a documented precondition (shape, range, ...)."""


class DataError(ContourselError):
    """Input data is malformed or non-finite."""


class ParseError(DataError):
    """A CSV/JSON artifact could not be parsed."""


class ProtocolError(ContourselError):
    """An experiment protocol requirement is not met."""


class TrainingError(ContourselError):
    """Training produced a non-finite loss or otherwise diverged."""


class SelectionError(ContourselError):
    """Solver selection received unusable predictions."""


class ConfigError(ContourselError):
    """Experiment configuration is invalid."""
