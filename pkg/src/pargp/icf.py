"""Pivoted incomplete Cholesky of the noise-free kernel matrix, and GP
prediction through the resulting low-rank factor.

The factorization targets K_DD = Sigma_DD - noise*I, pivoting greedily on the
largest remaining diagonal, so after R steps F (R x |D|) reproduces the
target exactly on the pivot rows/columns and the training covariance is
approximated as F^T F + noise*I. Prediction applies the Woodbury identity
through the R x R system Phi = I + noise^-1 F F^T; the |D| x |D| inverse is
never materialized.

The row update and pivot rule are exposed as primitives because the
distributed factorization must reproduce this one bitwise: both paths feed
identical kernel rows through identical einsum arithmetic, whether they see
a column slice or the whole array.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConditioningError, DimensionMismatch
from .fullgp import PredictiveDistribution
from .kernel import Dataset, Hyperparameters, cov_matrix, kernel_matrix, prior_variances, \
    resolve_prior_means
from .linalg import DEFAULT_JITTER, chol_factor, chol_solve

_RESIDUAL_TOL = -1e-8
_MAGIC = b"PICF0001"


@dataclass(frozen=True, eq=False)
class ICFFactor:
    """Rank-R incomplete Cholesky factor of a training kernel matrix.

    ``factor`` is R x |D| in the original column order (upper triangular once
    columns are permuted into pivot order). ``pivot_ids`` lists the training
    ids chosen as pivots; fewer than R entries means the residual hit zero
    early and the remaining rows are zero. ``residual_diag`` is what remains
    of the approximated diagonal (never below -1e-8).
    """

    factor: np.ndarray
    pivot_ids: np.ndarray
    residual_diag: np.ndarray
    point_ids: np.ndarray

    def __post_init__(self):
        if self.factor.ndim != 2:
            raise DimensionMismatch("factor must be a 2-d array")
        if self.residual_diag.shape != (self.factor.shape[1],):
            raise DimensionMismatch("residual diagonal must align with factor columns")
        worst = float(self.residual_diag.min()) if self.residual_diag.size else 0.0
        if worst < _RESIDUAL_TOL:
            raise ConditioningError(
                "K_DD (noise-free)", f"residual diagonal fell to {worst:.3e}"
            )

    @property
    def rank(self) -> int:
        return self.factor.shape[0]

    @property
    def achieved_rank(self) -> int:
        return self.pivot_ids.size

    def save(self, path) -> None:
        n = self.factor.shape[1]
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<3q", n, self.rank, self.achieved_rank))
            fh.write(self.pivot_ids.astype("<i8").tobytes())
            fh.write(self.point_ids.astype("<i8").tobytes())
            fh.write(np.ascontiguousarray(self.factor, dtype="<f8").tobytes())
            fh.write(self.residual_diag.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ICFFactor":
        raw = Path(path).read_bytes()
        if raw[: len(_MAGIC)] != _MAGIC:
            raise ValueError(f"{path}: not an ICF factor file")
        off = len(_MAGIC)
        n, rank, npiv = struct.unpack_from("<3q", raw, off)
        off += 24
        pivot_ids = np.frombuffer(raw, dtype="<i8", count=npiv, offset=off).astype(int)
        off += 8 * npiv
        point_ids = np.frombuffer(raw, dtype="<i8", count=n, offset=off).astype(int)
        off += 8 * n
        factor = np.frombuffer(raw, dtype="<f8", count=rank * n, offset=off)
        factor = factor.reshape(rank, n).astype(float)
        off += 8 * rank * n
        resid = np.frombuffer(raw, dtype="<f8", count=n, offset=off).astype(float)
        return cls(factor=factor, pivot_ids=pivot_ids, residual_diag=resid,
                   point_ids=point_ids)


def pivot_argmax(residual: np.ndarray, eligible: np.ndarray) -> int:
    """Index of the largest eligible residual; ties go to the lowest index."""
    masked = np.where(eligible, residual, -np.inf)
    return int(np.argmax(masked))


def icf_row_update(kernel_row: np.ndarray, rows_prefix: np.ndarray,
                   pivot_prefix: np.ndarray, pivot_root: float) -> np.ndarray:
    """One pivoted-Cholesky row: (k_j. - F[:k,j]^T F[:k,.]) / sqrt(pivot).

    einsum with optimize=False keeps the per-element accumulation order
    independent of how many columns are present, which the distributed
    factorization needs for bitwise agreement with the centralized one.
    """
    proj = np.einsum("l,li->i", pivot_prefix, rows_prefix, optimize=False)
    return (kernel_row - proj) / pivot_root


def icf_factorize(train: Dataset, h: Hyperparameters, rank: int) -> ICFFactor:
    """Greedy largest-diagonal pivoted incomplete Cholesky of Sigma_DD - noise*I.

    Runs exactly ``rank`` steps unless the residual diagonal is exhausted
    first (exact low-rank data); a pivot below -1e-8 means the kernel matrix
    was not positive semidefinite and raises ConditioningError.
    """
    n = len(train)
    if not (1 <= rank <= n):
        raise ValueError(f"rank must be in [1, {n}], got {rank}")
    X = train.X
    factor = np.zeros((rank, n))
    residual = np.full(n, h.signal_variance)
    eligible = np.ones(n, dtype=bool)
    pivots: list[int] = []
    for k in range(rank):
        j = pivot_argmax(residual, eligible)
        pivot = float(residual[j])
        if pivot < _RESIDUAL_TOL:
            raise ConditioningError(
                "K_DD (noise-free)", f"pivot {pivot:.3e} at step {k}"
            )
        if pivot <= 0.0:
            break
        root = float(np.sqrt(pivot))
        krow = kernel_matrix(X[j], X, h)[0]
        factor[k] = icf_row_update(krow, factor[:k], factor[:k, j], root)
        residual = residual - factor[k] * factor[k]
        residual[j] = 0.0
        eligible[j] = False
        pivots.append(j)
    return ICFFactor(
        factor=factor,
        pivot_ids=train.ids[np.asarray(pivots, dtype=int)],
        residual_diag=residual,
        point_ids=train.ids.copy(),
    )


def icf_predict(train: Dataset, test: Dataset, factor: ICFFactor, h: Hyperparameters,
                want_full_cov: bool = False,
                jitter: float = DEFAULT_JITTER) -> PredictiveDistribution:
    """GP prediction with Sigma_DD replaced by F^T F + noise*I.

    The reduced-rank replacement is not guaranteed positive semidefinite:
    negative predictive variances are reported as-is with psd_valid=False
    and the most negative value recorded.
    """
    if train.outputs is None:
        raise ValueError("training dataset has no realized outputs")
    if factor.factor.shape[1] != len(train):
        raise DimensionMismatch("factor columns do not match the training set")
    if not np.array_equal(factor.point_ids, train.ids):
        raise ValueError("factor was built from a different training set")
    F = factor.factor
    inv_noise = 1.0 / h.noise_variance
    mu_train, mu_test = resolve_prior_means(train, test)
    phi = np.eye(F.shape[0]) + inv_noise * (F @ F.T)
    fac_phi = chol_factor(phi, "Phi", jitter)

    resid = train.outputs - mu_train
    weights = inv_noise * resid - inv_noise**2 * (F.T @ chol_solve(fac_phi, F @ resid))
    cov_train_test = cov_matrix(train, test, h)
    mean = mu_test + cov_train_test.T @ weights

    projected = F @ cov_train_test
    back = chol_solve(fac_phi, projected)
    if want_full_cov:
        cov = (
            cov_matrix(test, test, h)
            - inv_noise * cov_train_test.T @ cov_train_test
            + inv_noise**2 * projected.T @ back
        )
        variance = np.diag(cov).copy()
    else:
        cov = None
        variance = (
            prior_variances(test, h)
            - inv_noise * np.einsum("du,du->u", cov_train_test, cov_train_test)
            + inv_noise**2 * np.einsum("ru,ru->u", projected, back)
        )
    worst = float(variance.min())
    flagged = worst < 0.0
    return PredictiveDistribution(
        mean, variance, test.ids.copy(), covariance=cov,
        psd_valid=not flagged,
        most_negative_variance=worst if flagged else None,
    )
