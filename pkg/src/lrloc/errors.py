"""Exception types raised across the package."""


class UsageError(ValueError):
    """Invalid arguments or violated preconditions."""


class DivergentSumError(UsageError):
    """A lattice sum was requested with an exponent for which it diverges."""


class IncompleteRealizationError(KeyError):
    """A potential value was requested for a site that was never sampled."""


class ResolventSingularError(ArithmeticError):
    """``H - E`` is singular (or too close to singular to trust)."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class DiagonalizationError(ArithmeticError):
    pass


class InsufficientDataError(ValueError):
    pass


class ScaleError(UsageError):
    """Degenerate or overflowing scale hierarchy."""

    def __init__(self, message, last_k=None):
        super().__init__(message)
        self.last_k = last_k
