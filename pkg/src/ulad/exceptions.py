"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An input parameter is outside its valid domain."""


class InfeasibleThresholdError(ArithmeticError):
    """The threshold optimisation produced an inconsistent system.

    Raised when the stationarity quadratic has no real root, when a root is
    not a minimum of the total error rate, or when a variance is nonpositive.
    """


class SampleFileError(ValueError):
    """A sample file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PrecisionWarning(UserWarning):
    """A Monte Carlo quantity rests on too few events to be reliable."""
