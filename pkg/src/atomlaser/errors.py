"""Exception types raised by the library."""


class AtomLaserError(Exception):
    """Base class for all library errors."""


class DomainError(AtomLaserError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConstraintViolation(AtomLaserError, ValueError):
    """An unraveling matrix violates ``||u|| <= 1``."""


class IntegrationError(AtomLaserError, ArithmeticError):
    """A numerical integration produced non-finite values."""


class ConvergenceError(AtomLaserError, ArithmeticError):
    """An iterative solver failed to converge."""


class TruncationError(AtomLaserError, ArithmeticError):
    """Probability leaked through the number-basis truncation."""


class InternalError(AtomLaserError, RuntimeError):
    """A condition that the model guarantees cannot occur was detected."""
