"""Exception types shared across the package.

Plain ValueError is used for domain errors on mathematical arguments
(x outside [0, 1], alpha outside (0, 2), and so on).  The classes here
cover the remaining failure modes that callers may want to catch
separately from bad arguments.
"""


class ConfigError(ValueError):
    """Invalid run configuration (CLI flags, presets, mismatched artifacts)."""


class DataError(ValueError):
    """Malformed or non-finite data encountered while reading or evaluating."""


class NumericsError(RuntimeError):
    """An iteration failed to converge or exceeded its step budget.

    Instances carry whatever diagnostics the failing routine could
    attach: ``residual`` for root finders, ``partial_path`` for the
    walk simulator.
    """

    def __init__(self, message, residual=None, partial_path=None):
        super().__init__(message)
        self.residual = residual
        self.partial_path = partial_path
