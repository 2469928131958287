"""Exception types raised across the package."""


class WaveguideError(Exception):
    """Base class for all package errors."""


class PoleProximityError(WaveguideError, ValueError):
    """Dispersion queried too close to the resonance pole k = phase."""


class InvalidArityError(WaveguideError, ValueError):
    pass


class TooFewAtomsError(WaveguideError, ValueError):
    pass


class LengthMismatchError(WaveguideError, ValueError):
    pass


class NotSymmetricError(WaveguideError, ValueError):
    pass


class NonzeroDoubleOccupancyError(WaveguideError, ValueError):
    pass


class MemoryBudgetExceededError(WaveguideError, MemoryError):
    pass


class SolverFailure(WaveguideError, RuntimeError):
    """Eigensolver did not converge or produced unacceptable residuals.

    ``indices`` holds the positions (sector-local or global) that failed.
    """

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class DimensionMismatchError(WaveguideError, ValueError):
    pass


class ZeroVectorError(WaveguideError, ValueError):
    pass


class DegenerateProjectionError(WaveguideError, ValueError):
    pass


class AmbiguousSignatureError(WaveguideError, ValueError):
    def __init__(self, message, marginal_estimate=None, factor_estimate=None):
        super().__init__(message)
        self.marginal_estimate = marginal_estimate
        self.factor_estimate = factor_estimate


class TooLargeError(WaveguideError, ValueError):
    pass


class IndexOutOfRangeError(WaveguideError, IndexError):
    pass
