"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Inconsistent shapes or invalid architecture/config values."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class NumericError(ArithmeticError):
    """Non-finite values or a failed numerical routine."""


class InvariantError(RuntimeError):
    """An internal invariant was violated (usually a sorting or indexing bug)."""
