"""Exception and warning types shared across the package."""


class PrequantumError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(PrequantumError, ValueError):
    """Invalid user input: ranges, dimensions, non-regular matrices, schema."""


class ContractViolation(PrequantumError, ValueError):
    """An operation was called with arguments that break its contract."""


class NumericError(PrequantumError, ArithmeticError):
    """A numerical procedure failed; ``residual`` carries the offending size."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IntegrationError(NumericError):
    """The ODE integrator could not advance (step underflow, non-finite state)."""

    def __init__(self, message, t=None, state=None, step=None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.step = step


class InsufficientDataError(NumericError):
    """Not enough samples to perform a fit or measurement."""


class SamplingError(NumericError):
    """A time series is sampled too coarsely for phase unwrapping."""


class IncoherentFixedPointWarning(UserWarning):
    """Energy was read off an incoherent fixed point; it need not be an eigenvalue."""
