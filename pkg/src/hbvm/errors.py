"""Exception types raised across the package."""


class PreconditionError(ValueError):
    """A construction precondition does not hold (e.g. insufficient quadrature exactness)."""


class DomainError(ValueError):
    """A function was evaluated outside its mathematical domain."""


class StepFailure(RuntimeError):
    """The stage equations of one step could not be solved.

    Attributes:
        residual: max-norm of the last residual seen by the solver.
        iterations: number of iterations performed before giving up.
    """

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
