"""Exception types shared across the estimation routines."""


class DegenerateStatisticError(ValueError):
    """A sample statistic needed for estimation is undefined or degenerate.

    Raised e.g. when a circular mean has zero resultant length, when a
    mean resultant length of 0 or 1 makes the moment-based starting
    values unusable, or when a classification M-step sees fewer than two
    observations or a zero-variance coordinate.
    """


class SingularCovarianceError(ValueError):
    """A covariance matrix is numerically singular or not positive definite."""


class LatticeTooLargeError(ValueError):
    """The requested wrapping lattice exceeds the row-count guard."""


class DimensionGuardError(ValueError):
    """Direct numerical maximization was requested above its dimension limit."""


class NumericalFailureError(RuntimeError):
    """An iterative fit produced a non-finite log-likelihood."""


class ConvergenceError(RuntimeError):
    """An iterative construction failed to reach its target tolerance."""
