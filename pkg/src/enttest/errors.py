"""Exception hierarchy for enttest.

All library errors derive from :class:`EnttestError` so callers can catch one
base class. The CLI maps these onto exit codes (validation errors -> 3,
numerical failures -> 4).
"""


class EnttestError(Exception):
    """Base class for all enttest errors."""


class DomainError(EnttestError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class BracketError(DomainError):
    """A root-finding bracket does not enclose a sign change."""


class ValidationError(EnttestError, ValueError):
    """A data record, allocation, or file violates its invariants."""


class InsufficientDataError(ValidationError):
    """The record contains no usable counts for the requested analysis."""


class NumericalError(EnttestError, ArithmeticError):
    """A numerical procedure failed (non-convergence, invalid radicand)."""
