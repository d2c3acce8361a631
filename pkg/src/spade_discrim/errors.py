"""Exception types shared across the package.

Validation problems derive from :class:`ValueError` so callers that only care
about "bad input" can catch that; :class:`NumericalFailure` signals that a
computation on valid input did not converge.
"""


class SpadeError(Exception):
    """Base class for all package errors."""


class DomainError(SpadeError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidStrengthError(DomainError):
    """Crosstalk strength incompatible with the requested model."""


class DegenerateError(DomainError):
    """The configuration collapses (zero probability, zero variance, ...)."""


class RegimeError(DomainError):
    """An asymptotic formula was asked for outside its regime of validity."""


class ModelInconsistencyError(SpadeError, ValueError):
    """Observed data has zero probability under both hypotheses."""


class NumericalFailure(SpadeError, ArithmeticError):
    """Quadrature or search failed to reach the requested accuracy."""
