"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class SeriesOverflowError(RuntimeError):
    """A special-function series failed to converge within its term budget."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations.

    Carries the best iterate seen so far in ``best`` (solver specific).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConstantMisestimateError(RuntimeError):
    """A fixed-constants descent step violated its guaranteed decrease.

    Raised only in fixed-constants mode; the remedy is to rerun in adaptive
    mode or supply larger smoothness constants.
    """


class CalibrationError(RuntimeError):
    """No constant on the calibration grid meets the failure-probability target."""


class DivergenceError(RuntimeError):
    """A stochastic training run diverged; the partial trajectory is attached."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
