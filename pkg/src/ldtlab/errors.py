"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments: mismatched fields, dimensions, violated preconditions."""


class ResourceCapError(RuntimeError):
    """A configured enumeration or materialization cap would be exceeded."""

    def __init__(self, message, requested=None, cap=None):
        super().__init__(message)
        self.requested = requested
        self.cap = cap


class RareEventError(RuntimeError):
    """Rejection sampling gave up before finding a qualifying sample."""

    def __init__(self, message, draws):
        super().__init__(f"{message} (after {draws} draws)")
        self.draws = draws


class NoFitError(RuntimeError):
    """No degree-d polynomial explains the data (a signal, not a crash)."""

    def __init__(self, message, best_score=None):
        super().__init__(message)
        self.best_score = best_score


class InsufficientDataError(UsageError):
    """The interpolation system is underdetermined."""
