"""Exception types shared across the package."""


class GPError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GPError, ValueError):
    """Inputs whose shapes or feature dimensions do not line up."""


class ConditioningError(GPError):
    """A matrix that must be positive definite failed to factorize.

    Carries the name of the offending matrix so callers can tell which
    part of the computation went singular.
    """

    def __init__(self, matrix_name: str, detail: str = ""):
        self.matrix_name = matrix_name
        msg = f"Cholesky factorization of {matrix_name} failed (after jitter)"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NonPositiveVariance(GPError, ValueError):
    """A metric was asked to evaluate nonpositive predictive variances."""

    def __init__(self, count: int, worst: float):
        self.count = count
        self.worst = worst
        super().__init__(
            f"{count} predictive variance(s) are nonpositive (worst {worst:.6g}); "
            "refusing to evaluate the metric"
        )
