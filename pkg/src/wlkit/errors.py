"""Shared exception types."""


class BudgetExceededError(RuntimeError):
    """An enumeration or search exceeded its configured budget."""


class FormatError(ValueError):
    """A text artifact could not be parsed."""
