"""Exception types shared across the package."""


class IntegrationError(RuntimeError):
    """An ODE integration could not reach the requested time."""

    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail


class ResonanceError(ValueError):
    """Drive frequency too close to the shifted cavity frequency."""


class ConsistencyError(ArithmeticError):
    """A closed-form quantity failed an internal realness or positivity check."""


class ConvergenceError(RuntimeError):
    """Fock truncation did not converge within the allowed dimensions."""
