"""Exception hierarchy.

Validation problems map to CLI exit code 2, numerical failures to exit code 3.
"""


class HLSimError(Exception):
    """Base class for all package errors."""


class ValidationError(HLSimError, ValueError):
    """Input rejected before any computation starts."""


class InvalidDimensionError(ValidationError):
    pass


class InvalidParameterError(ValidationError):
    pass


class ContractViolation(ValidationError):
    """A numerical precondition (e.g. a traceless right-hand side) does not hold."""


class NumericalError(HLSimError, ArithmeticError):
    """A kernel could not deliver a result meeting its contract."""


class SingularMatrixError(NumericalError):
    def __init__(self, message, pivot=0.0):
        super().__init__(f"{message} (smallest pivot magnitude {pivot:.3e})")
        self.pivot = pivot


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} after {iterations} iterations (last residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations
