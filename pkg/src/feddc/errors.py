"""Exception hierarchy shared across the package."""


class FedDCError(Exception):
    """Base class for all package errors."""


class ContractViolation(FedDCError, ValueError):
    """A function was called with arguments that break its preconditions."""


class ConfigError(FedDCError, ValueError):
    """An experiment, generator or protocol configuration is invalid."""


class IngestionError(ConfigError):
    """A data file could not be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InfeasibleError(FedDCError, ValueError):
    """A requested guarantee cannot be met with the given resources."""
