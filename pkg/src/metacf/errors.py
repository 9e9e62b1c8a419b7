"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary bad-argument cases; the classes
here mark failures a caller may want to handle distinctly (CLI exit codes,
sweep error tagging).
"""


class MetacfError(Exception):
    """Base class for all package-specific errors."""


class MatrixFormatError(MetacfError, ValueError):
    """Malformed matrix CSV: duplicate ids, bad header, invalid cells."""


class ConfigurationError(MetacfError, ValueError):
    """Invalid configuration registry or learner/hyperparameter spec."""


class EvaluationError(MetacfError, RuntimeError):
    """Failure while scoring or aggregating an evaluation run."""


class DivergenceError(MetacfError, RuntimeError):
    """Non-finite loss encountered while training an engine."""
