"""Exception types raised by the library."""


class QuadratureError(ArithmeticError):
    """Panel quadrature did not reach its tolerance.

    ``estimate`` holds the achieved absolute error estimate.
    """

    def __init__(self, msg, estimate=float("nan")):
        super().__init__(msg)
        self.estimate = estimate


class CertificateError(ValueError):
    """The temporal profile has no usable lower-bound certificate."""


class IllConditionedError(ValueError):
    """A forward multiplier is numerically zero; ``mode`` is its 1-based index."""

    def __init__(self, msg, mode):
        super().__init__(msg)
        self.mode = mode


class NoSolutionError(ValueError):
    """The discrepancy equation has no root for the requested level."""


class ExperimentError(RuntimeError):
    """An experiment could not produce a usable result (e.g. too few fit points)."""
