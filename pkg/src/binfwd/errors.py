"""Exception types shared across the package."""


class BinfwdError(Exception):
    """Base class for all package errors."""


class AxisNotFoundError(BinfwdError, KeyError):
    def __init__(self, name, available=()):
        self.name = name
        self.available = tuple(available)
        super().__init__(f"axis {name!r} not found (have {', '.join(self.available) or 'none'})")

    def __str__(self):
        return self.args[0]


class DomainError(BinfwdError, ValueError):
    """An argument lies outside the domain of the operation."""


class NormalizationError(BinfwdError, ValueError):
    """A distribution or kernel does not sum to one, or has negative mass."""


class ZeroProbabilityError(BinfwdError, ValueError):
    """Conditioning on an event of probability zero."""


class FactorError(BinfwdError, ValueError):
    """Invalid factor chain (dangling conditioning axis, duplicate production)."""


class AlphabetMismatchError(BinfwdError, ValueError):
    """Decision alphabets do not agree with the channel definition."""


class SchemaError(BinfwdError, ValueError):
    """An input file does not satisfy its schema."""


class BudgetExceededError(BinfwdError, RuntimeError):
    """A simulation would exceed its memory/compute guard."""

    def __init__(self, message, required=None, limit=None):
        super().__init__(message)
        self.required = required
        self.limit = limit


class InfeasibleError(BinfwdError, RuntimeError):
    """No feasible point was found by the optimizer."""
