"""Exception hierarchy."""


class BurgBiasError(Exception):
    """Base class for all package errors."""


class DomainError(BurgBiasError, ValueError):
    """Model outside the stationary region, or an unsupported order."""


class ConvergenceError(BurgBiasError, ArithmeticError):
    """An infinite sum could not be truncated within the lag cap."""


class InvalidAtomError(BurgBiasError, ValueError):
    """Statistic indices violate ``max(m, k) < i``."""

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at position {position})")
        self.position = position


class ExprSyntaxError(BurgBiasError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SingularExpansionError(BurgBiasError, ZeroDivisionError):
    """A denominator vanishes at the expansion point."""


class DegenerateInputError(BurgBiasError, ValueError):
    """Series with zero energy or a singular design/Toeplitz matrix."""
