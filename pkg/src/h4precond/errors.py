"""Exception types raised by the numerical kernels."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, breakdown, singularity)."""


class ConvergenceError(NumericalError):
    """An iteration did not reach its tolerance within the allowed budget."""


class BreakdownError(NumericalError):
    """A Krylov recurrence broke down and could not be restarted."""
