"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An input broke a documented precondition (bad shape, sign, range)."""


class RegularizerPoleError(ContractViolation):
    """The LPN weight was requested at ``|x| + eps == 0`` where it diverges."""


class ResidualsVanished(ArithmeticError):
    """Every residual in the Anderson window is exactly zero.

    This is a convergence signal, not a failure: the weight problem is
    degenerate because the iteration has already reached a fixed point.
    """


class SolverDivergence(RuntimeError):
    """The objective became non-finite during a solve."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
