"""Exception hierarchy shared across the package.

Exit-code mapping used by the command line front end: configuration
problems map to exit code 2, numerical failures to exit code 3.
"""


class Error(Exception):
    """Base class for all package errors."""


class InputError(Error, ValueError):
    """Invalid argument, configuration value, or non-evaluable input."""


class ConfigError(InputError):
    """Malformed or inconsistent experiment configuration."""


class NumericalError(Error, RuntimeError):
    """A numerical routine failed to reach its accuracy contract."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class CovarianceError(NumericalError):
    """Sampled spectral density is negative beyond tolerance."""


class ResolutionError(InputError):
    """Temporal kernel narrower than the integration step."""


class BoxSizeError(NumericalError):
    """Probability mass reached the edge of the periodic box."""


class StabilityError(NumericalError):
    """Time step violates the stability limit of an explicit scheme."""


class PoleError(NumericalError):
    """Laplace-domain expression evaluated at one of its poles."""


class TruncationError(NumericalError):
    """Requested tail bound for a truncated integral is unachievable."""
