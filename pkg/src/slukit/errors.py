"""Exception hierarchy shared across the package.

Every error the CLI maps to an exit code lives here; library code raises
these rather than bare ValueError/RuntimeError so callers can tell a shape
bug from a data bug from a diverged run.
"""


class SlukitError(Exception):
    """Base class for all package errors."""


class DimensionError(SlukitError, ValueError):
    """Tensor shapes incompatible with the requested operation."""


class DomainError(SlukitError, ValueError):
    """Input outside the mathematical domain of an operation."""


class StateError(SlukitError, RuntimeError):
    """Operation invoked on an object in the wrong lifecycle state."""


class DeterminismError(SlukitError):
    """A loss function produced different values on identical evaluations."""


class ValidationError(SlukitError, ValueError):
    """A domain object violates its invariants."""


class ParseError(ValidationError):
    """A dataset line could not be parsed; carries the line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ConfigError(SlukitError):
    """Invalid or unknown configuration key/value."""


class GenerationError(SlukitError):
    """The synthetic generator could not produce a valid sample."""


class NumericError(SlukitError):
    """Non-finite values encountered during optimization."""


class CheckpointError(SlukitError):
    """Checkpoint file missing, malformed, or of an unsupported version."""
