"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of a formula."""


class IllConditioned(ArithmeticError):
    """Regularized Gram matrix is numerically singular for this draw."""

    def __init__(self, message, cond=None, trial=None):
        super().__init__(message)
        self.cond = cond
        self.trial = trial


class TooManySkipped(RuntimeError):
    """More than the allowed fraction of Monte Carlo trials were skipped."""


class EmptyDomain(ValueError):
    pass


class NoBracket(ArithmeticError):
    pass
