"""Shared exception types."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the last observed residual(s) and the iteration count at which
    the solver gave up, so callers can log or retry with looser settings.
    """

    def __init__(self, message, *, residuals=None, iterations=None):
        super().__init__(message)
        self.residuals = residuals
        self.iterations = iterations
