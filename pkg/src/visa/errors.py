"""Exception types shared across the package."""


class VisaError(Exception):
    """Base class for package-specific errors."""


class DegenerateWeightsError(VisaError):
    """Every importance weight in a batch is zero (all log-joints -inf).

    When raised by the optimization loop, the partial trace accumulated up
    to the failure is attached as ``trace`` (may be None).
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class OutOfSupportError(VisaError):
    """A point lies outside the support of the variational family."""


class UnsupportedFamilyError(VisaError):
    """The requested operation is not defined for this family/transform."""


class UnsupportedModelError(VisaError):
    """The model does not expose what the estimator needs (e.g. gradients)."""


class NonFiniteGradientError(VisaError):
    """An optimizer step received a gradient with NaN or infinite entries."""


class IntegrationError(VisaError):
    """The ODE integrator produced a non-finite state."""


class NonMixingError(VisaError):
    """A sampling chain accepted no proposals after burn-in."""


class ConfigError(VisaError):
    """An experiment config file is invalid; message includes the field path."""
