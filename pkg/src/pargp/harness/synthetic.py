"""Synthetic regression instances drawn exactly from the model's own prior.

Inputs are uniform on the unit cube; outputs are one joint draw from the
Gaussian prior (signal plus observation noise) over all train and test
inputs, so the model is well specified and the exact GP is the optimal
predictor. Dense sampling caps the size at desk scale.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConditioningError
from ..kernel import Dataset, Hyperparameters, kernel_matrix
from ..linalg import DEFAULT_JITTER

MAX_DENSE_POINTS = 20000


def generate_synthetic(n_train: int, n_test: int, d: int, h: Hyperparameters,
                       seed: int, prior_mean: float = 0.0,
                       jitter: float = DEFAULT_JITTER):
    """Return (train, test) datasets sharing one joint prior draw."""
    if d != h.dim:
        raise ValueError(f"requested dimension {d} but hyperparameters have {h.dim}")
    n = n_train + n_test
    if n > MAX_DENSE_POINTS:
        raise ValueError(
            f"{n} points need a dense {n}x{n} Cholesky; cap is {MAX_DENSE_POINTS}"
        )
    if n_train < 1 or n_test < 0:
        raise ValueError("need at least one training point")
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    joint = kernel_matrix(X, X, h)
    joint[np.diag_indices(n)] += h.noise_variance + jitter
    try:
        lower = np.linalg.cholesky(joint)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("joint prior covariance", str(exc)) from exc
    y = prior_mean + lower @ rng.standard_normal(n)
    train = Dataset(X[:n_train], outputs=y[:n_train], prior_mean=prior_mean)
    test = Dataset(X[n_train:], outputs=y[n_train:], prior_mean=prior_mean)
    return train, test
