"""Exact (dense) Gaussian-process regression.

The full GP is both a product feature and the reference that every low-rank
approximation in this package is measured against. Solves go through a
Cholesky factor of the training covariance; the explicit inverse is never
formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .kernel import Dataset, Hyperparameters, cov_matrix, prior_variances, resolve_prior_means
from .linalg import DEFAULT_JITTER, chol_factor, chol_solve


@dataclass
class PredictiveDistribution:
    """Posterior mean and uncertainty over an ordered set of test inputs.

    ``variance`` is always populated; ``covariance`` only when a full joint
    matrix was requested. ``psd_valid`` is False only for reduced-rank
    (incomplete-Cholesky) outputs whose variances went negative, in which
    case ``most_negative_variance`` records the worst offender.
    """

    mean: np.ndarray
    variance: np.ndarray
    ordering: np.ndarray
    covariance: np.ndarray | None = None
    psd_valid: bool = True
    most_negative_variance: float | None = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.variance = np.asarray(self.variance, dtype=float).reshape(-1)
        self.ordering = np.asarray(self.ordering, dtype=int).reshape(-1)
        n = self.ordering.size
        if self.mean.shape != (n,) or self.variance.shape != (n,):
            raise DimensionMismatch("mean/variance must align with the test ordering")
        if self.covariance is not None and self.covariance.shape != (n, n):
            raise DimensionMismatch("full covariance must be square of matching size")


def fgp_predict(train: Dataset, test: Dataset, h: Hyperparameters,
                want_full_cov: bool = False,
                jitter: float = DEFAULT_JITTER) -> PredictiveDistribution:
    """Exact GP posterior over the test inputs.

    mean = mu_U + S_UD S_DD^-1 (y - mu_D), covariance = S_UU - S_UD S_DD^-1 S_DU.
    Cubic in the training size; intended for data that fits one dense factor.
    """
    if train.outputs is None:
        raise ValueError("training dataset has no realized outputs")
    if len(test) == 0:
        raise ValueError("test dataset is empty")
    mu_train, mu_test = resolve_prior_means(train, test)
    cov_train = cov_matrix(train, train, h)
    cov_test_train = cov_matrix(test, train, h)
    factor = chol_factor(cov_train, "Sigma_DD", jitter)
    alpha = chol_solve(factor, train.outputs - mu_train)
    mean = mu_test + cov_test_train @ alpha
    back = chol_solve(factor, cov_test_train.T)
    if want_full_cov:
        cov = cov_matrix(test, test, h) - cov_test_train @ back
        variance = np.diag(cov).copy()
    else:
        cov = None
        variance = prior_variances(test, h) - np.einsum("ud,du->u", cov_test_train, back)
    return PredictiveDistribution(mean, variance, test.ids.copy(), covariance=cov)
