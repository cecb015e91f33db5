"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input value; the message names the offending field."""


class UnboundedReaction(ValueError):
    """Growth term without a cubic damping term to absorb it."""


class PreconditionViolation(ValueError):
    pass


class NonConvergence(RuntimeError):
    """Nonlinear iteration hit max_iters.

    ``report`` carries the last StepReport, ``step`` the time index when raised
    from a run.
    """

    def __init__(self, message, report=None, step=None):
        super().__init__(message)
        self.report = report
        self.step = step


class LinearSolveFailure(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
