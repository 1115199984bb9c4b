"""Cholesky helpers with a uniform jitter convention.

Every positive-definite solve in the package goes through these wrappers:
a configurable jitter (default 1e-10) is added to the diagonal before
factorization, and failures surface as ConditioningError naming the matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ConditioningError

DEFAULT_JITTER = 1e-10


def chol_factor(mat: np.ndarray, name: str, jitter: float = DEFAULT_JITTER):
    """Lower-triangular Cholesky factor of ``mat + jitter*I``."""
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConditioningError(name, f"not square: shape {a.shape}")
    if jitter:
        a = a + jitter * np.eye(a.shape[0])
    try:
        return scipy.linalg.cho_factor(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ConditioningError(name, str(exc)) from exc


def chol_solve(factor, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.cho_solve(factor, b)


def solve_lower(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.solve_triangular(lower, b, lower=True)
