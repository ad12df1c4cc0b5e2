"""Exception hierarchy shared across the package."""


class SqkdError(Exception):
    """Base class for all package errors."""


class DomainError(SqkdError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EstimationError(SqkdError, ValueError):
    """A statistic required for parameter estimation is missing."""


class DegenerateAttackError(SqkdError, ValueError):
    """The attack leaves no surviving key-distillation iterations."""


class InfeasibleError(SqkdError, ArithmeticError):
    """Observed statistics admit no attack consistent with the constraints."""
