"""Exception types raised across the package."""


class ModErrError(Exception):
    """Base class for all package errors."""


class ValidationError(ModErrError, ValueError):
    """Input violates a documented precondition."""


class ConfigError(ModErrError):
    """Malformed or invalid experiment configuration.

    ``line`` is the 1-based line number in the config file when known.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(ModErrError):
    """Base class for numerical failures (CLI exit code 3)."""


class IntegrationError(NumericalError):
    """Non-finite values appeared while advancing the model."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class NotPSDError(NumericalError):
    """Matrix is not positive semi-definite within tolerance."""


class IllPosedAnalysisError(NumericalError):
    """Innovation covariance H B H^T + R could not be factorized."""
