"""Exception hierarchy.

The CLI maps :class:`ConfigError` to exit status 2 and
:class:`NumericalError` to exit status 3.
"""


class PapdynError(Exception):
    """Base class for all package errors."""


class ConfigError(PapdynError):
    """Malformed configuration, model, or expression."""


class ExpressionError(ConfigError):
    """Expression text outside the supported grammar or shape."""


class ModelValidationError(ConfigError):
    """A model violates a structural rule (dimensions, delays, activations)."""


class NumericalError(PapdynError):
    """A numerical procedure could not produce a trustworthy result."""


class DomainError(NumericalError):
    """A signal was evaluated below its declared domain floor."""


class UnboundedError(NumericalError):
    """A requested bound is infinite on the given domain."""


class InvalidMeasureError(NumericalError):
    """A measure density is negative or its mass is degenerate."""


class DivergenceError(NumericalError):
    """The integrator produced a non-finite state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepSizeError(NumericalError):
    """Integration step larger than the smallest delay."""


class NoCouplingError(NumericalError):
    """The envelope constant M is undefined because a row has no coupling."""


class NoCertificateError(NumericalError):
    """The decay function is not positive at zero (q1 >= 1)."""
