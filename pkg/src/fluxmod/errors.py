"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: config errors are 2, physics-domain
errors 3, convergence errors 4.
"""


class FluxmodError(Exception):
    """Base class for all package errors."""


class DomainError(FluxmodError):
    """Input outside the physically or numerically supported domain."""


class ConvergenceError(FluxmodError):
    """An iterative scheme failed to reach its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class CalibrationError(ConvergenceError):
    """Device calibration could not match the requested band."""


class BracketError(DomainError):
    """Root bracket does not contain a sign change / interior extremum."""


class FitQualityError(FluxmodError):
    """Decay fit rejected because the data is too noisy or non-monotone."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(FluxmodError):
    """Invalid run configuration."""
