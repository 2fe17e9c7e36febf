"""Exception and warning types shared across the package."""


class InvalidParameterError(ValueError):
    """A distribution or model parameter is outside its domain."""


class DeflationInfeasibleError(ValueError):
    """Mixture-type deflation pushed the zero probability to (or below) zero."""


class NoSolutionError(ValueError):
    """A requested inversion or matching problem has no solution."""


class NonFiniteError(ValueError):
    """A likelihood evaluation produced NaN terms."""


class DataError(ValueError):
    """Input data are malformed or unusable for the requested model."""


class ConvergenceError(RuntimeError):
    """Optimization failed the convergence test.

    ``result`` holds the best fit found so far (``converged`` False).
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SingularHessianError(RuntimeError):
    """Numeric Hessian is singular or indefinite; no covariance available."""


class SeparationWarning(UserWarning):
    """A design cell has no positive (or no zero) counts; a boundary estimate
    was clamped."""
