"""Greedy selection of a support set by largest posterior variance.

Each round adds the candidate whose predictive variance given the points
picked so far is largest; outputs are never consulted, so the set can be
chosen before any data is collected. The selected points become a standalone
dataset, so downstream cross-covariances against training or test data carry
no noise while the support Gram matrix keeps noise on its diagonal.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError
from .kernel import Dataset, Hyperparameters, kernel_matrix
from .linalg import DEFAULT_JITTER, solve_lower

_VARIANCE_DROP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SupportSet:
    """Selected support inputs in pick order.

    ``dataset`` is a fresh dataset keeping the candidates' original ids;
    ``selection_variances`` records the posterior variance of each pick at
    the time it was chosen (non-increasing for stationary kernels).
    """

    dataset: Dataset
    selection_variances: np.ndarray

    @property
    def size(self) -> int:
        return len(self.dataset)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            d = self.dataset.dim
            writer.writerow(["id"] + [f"f{i+1}" for i in range(d)])
            for pid, row in zip(self.dataset.ids, self.dataset.X):
                writer.writerow([int(pid)] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "SupportSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not body:
            raise ValueError(f"{path}: no support points")
        ids = np.array([int(r[0]) for r in body])
        X = np.array([[float(v) for v in r[1:]] for r in body])
        ds = Dataset(X, ids=ids)
        return cls(dataset=ds, selection_variances=np.full(len(ds), np.nan))


def select_support(candidates: Dataset, target_size: int, h: Hyperparameters,
                   jitter: float = DEFAULT_JITTER) -> SupportSet:
    """Pick ``target_size`` inputs greedily by largest posterior variance.

    Maintains a growing Cholesky of the support Gram matrix and per-candidate
    variance residuals, so the whole selection costs O(n * k^2) instead of a
    fresh k^3 solve per round. Ties break to the lowest candidate id; with a
    stationary kernel the very first pick is therefore the lowest id.
    """
    n = len(candidates)
    if n == 0:
        raise ValueError("candidate set is empty")
    if not (1 <= target_size <= n):
        raise ValueError(f"target_size must be in [1, {n}], got {target_size}")
    if target_size > n // 2 and n > 1:
        warnings.warn(
            f"support size {target_size} exceeds half the candidate pool ({n}); "
            "the low-rank approximation buys little at this size",
            stacklevel=2,
        )

    # Work in ascending-id order so argmax tie-breaking is the id rule and the
    # result cannot depend on how the candidate list happened to be ordered.
    order = np.argsort(candidates.ids, kind="stable")
    X = candidates.X[order]
    ids = candidates.ids[order]

    diag = h.signal_variance + h.noise_variance + jitter  # support Gram diagonal
    resid = np.full(n, h.signal_variance + h.noise_variance)
    lower = np.zeros((target_size, target_size))
    whitened = np.zeros((target_size, n))  # L^-1 K_{S,candidates}, grown per pick
    picked = np.zeros(n, dtype=bool)
    picks: list[int] = []
    pick_vars: list[float] = []

    for step in range(target_size):
        masked = np.where(picked, -np.inf, resid)
        j = int(np.argmax(masked))
        pick_vars.append(float(resid[j]))
        krow = kernel_matrix(X[j], X, h)[0]
        if step == 0:
            root = np.sqrt(diag)
            wrow = krow / root
        else:
            ell = solve_lower(lower[:step, :step], krow[picks])
            gap = diag - ell @ ell
            if gap <= 0:
                raise ConditioningError(
                    "Sigma_SS", f"non-positive pivot at pick {step} (candidate id {ids[j]})"
                )
            root = np.sqrt(gap)
            lower[step, :step] = ell
            wrow = (krow - ell @ whitened[:step]) / root
        lower[step, step] = root
        whitened[step] = wrow
        resid = resid - wrow * wrow
        picked[j] = True
        picks.append(j)

    chosen = np.asarray(picks)
    return SupportSet(
        dataset=Dataset(X[chosen], ids=ids[chosen]),
        selection_variances=np.asarray(pick_vars),
    )
