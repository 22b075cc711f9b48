"""Exception types shared across the package."""


class DomainError(ValueError):
    """Invalid input: out-of-domain arguments, malformed states, bad config."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class BudgetError(RuntimeError):
    """A computation would exceed its configured resource budget.

    Attributes
    ----------
    partial : object
        Whatever partial progress is available (e.g. completed depth).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
