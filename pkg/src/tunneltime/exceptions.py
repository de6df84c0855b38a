"""Exception types shared by all modules."""


class ValidationError(ValueError):
    """Invalid input: bad grid, malformed potential, inconsistent shapes."""


class NumericalFailure(RuntimeError):
    """A tolerance could not be reached (nonconvergence, truncated tails, underflow).

    ``diagnostics`` carries whatever quantity was measured when the check failed,
    e.g. the probability mass captured before hitting the ``m`` cap.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
