"""Exception hierarchy shared across the package, with CLI exit codes."""


class SPPSError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(SPPSError):
    """Invalid user input: bad dimensions, malformed files, broken preconditions."""

    exit_code = 2


class NonConvergenceError(SPPSError):
    """A likelihood maximisation failed (separation or iteration budget).

    ``result`` holds the last iterate as a :class:`~spps.solvers.StepResult`
    so callers can recover or report it.
    """

    exit_code = 3

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class EstimationError(SPPSError):
    """An estimator cannot be evaluated (invalid weights, empty arm)."""

    exit_code = 4


class DegenerateFitError(EstimationError):
    """Fitted propensities are degenerate (zero residual variance or zero block)."""

    exit_code = 4


class BootstrapUnreliableError(SPPSError):
    """Too many bootstrap resamples failed; ``report`` carries partial results."""

    exit_code = 5

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
