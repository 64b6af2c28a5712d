"""Exception hierarchy shared by all modules."""


class GeodesicError(Exception):
    """Base class for every error raised by :mod:`dlngeo`."""


class DomainError(GeodesicError, ValueError):
    """An input lies outside the domain of the operation (not SPD, not symmetric, ...)."""


class RankError(GeodesicError, ValueError):
    """A matrix that must be full rank is (numerically) rank deficient."""


class NumericalFailure(GeodesicError, ArithmeticError):
    """A factorization failed to converge or an iteration produced non-finite values."""


class SingularityError(GeodesicError, ArithmeticError):
    """A matrix that must be inverted is singular."""


class NoConvergence(GeodesicError):
    """The shooting solver did not reach its tolerance.

    This means no geodesic was found by this method, not that none exists.
    """

    def __init__(self, message, best_residual=None, iterations=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class NotBalanced(GeodesicError, ValueError):
    """A weight tuple violates the balancedness constraint."""


class DegenerateSpectrum(GeodesicError, ValueError):
    """Repeated singular values make a requested factorization non-unique."""


class AlignmentError(GeodesicError, ValueError):
    """Endpoints do not share singular vectors up to a common rotation."""
