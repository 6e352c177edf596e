"""Exception hierarchy.  The CLI maps these onto exit codes."""


class SIRError(Exception):
    """Base class for errors raised by this package."""


class InvalidInput(SIRError, ValueError):
    """A parameter, state or control violates its invariants."""


class NumericalFailure(SIRError, ArithmeticError):
    """Integration produced NaN/inf or a computation lost its guarantees."""


class HorizonExceeded(NumericalFailure):
    """The threshold was not reached before the integration horizon."""


class DegenerateCrossing(NumericalFailure):
    """dI/dt at the threshold crossing is too close to zero to divide by."""


class NonConvergence(NumericalFailure):
    """An iterative solver stopped at ``max_iter`` above tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
