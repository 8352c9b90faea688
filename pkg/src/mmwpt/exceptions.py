"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class ConvergenceError(ArithmeticError):
    """A series was evaluated outside its radius of convergence or ran out of terms."""


class UnreachableThresholdError(ValueError):
    """The requested DC power is at or above the rectifier saturation level."""


class DegenerateTruncationError(ArithmeticError):
    """A truncated distance law has (numerically) zero remaining mass."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to meet its tolerance.

    Attributes:
        panel: (a, b) interval of the worst panel.
        error: estimated absolute error on that panel.
    """

    def __init__(self, message, panel=None, error=None):
        super().__init__(message)
        self.panel = panel
        self.error = error


class ConfigError(ValueError):
    """A configuration file or override could not be parsed."""
