"""Squared-exponential covariance with ARD length-scales, and the data types.

Every covariance matrix consumed by the predictors comes out of this module.
Observation noise enters through a Kronecker delta on *point identity*: two
matrix entries pick up ``noise_variance`` only when they refer to the same
point of the same dataset. Duplicated feature vectors at distinct ids
therefore carry no cross-noise (training Gram matrices stay well
conditioned), a support set — being its own dataset — gets noise on its
diagonal only, and cross-covariances between different datasets never see it.

All functions here are pure over immutable inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .configio import read_keyvalues, write_keyvalues
from .errors import DimensionMismatch

# Cap on the element count of one broadcasted difference tensor; larger
# requests are evaluated in row chunks (identical arithmetic per entry).
_CHUNK_ELEMS = 1 << 26


@dataclass(frozen=True, eq=False)
class Hyperparameters:
    """Signal variance, noise variance, and per-dimension length-scales."""

    signal_variance: float
    noise_variance: float
    length_scales: np.ndarray

    def __post_init__(self):
        ell = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ell)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if not (self.signal_variance > 0 and self.noise_variance > 0):
            raise ValueError("signal_variance and noise_variance must be strictly positive")
        if ell.ndim != 1 or ell.size == 0 or not np.all(ell > 0):
            raise ValueError("length_scales must be a vector of strictly positive reals")

    @property
    def dim(self) -> int:
        return self.length_scales.size

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Hyperparameters":
        ell = [float(v) for v in str(mapping["length_scales"]).split(",")]
        return cls(
            signal_variance=float(mapping["signal_variance"]),
            noise_variance=float(mapping["noise_variance"]),
            length_scales=np.asarray(ell),
        )

    @classmethod
    def from_file(cls, path) -> "Hyperparameters":
        return cls.from_mapping(read_keyvalues(path))

    def to_file(self, path) -> None:
        write_keyvalues(
            path,
            {
                "signal_variance": repr(float(self.signal_variance)),
                "noise_variance": repr(float(self.noise_variance)),
                "length_scales": ",".join(repr(float(v)) for v in self.length_scales),
            },
        )


@dataclass(frozen=True, eq=False)
class InputPoint:
    """A d-dimensional input with an id unique within its dataset."""

    features: np.ndarray
    id: int
    origin: object = None

    def __post_init__(self):
        object.__setattr__(self, "features", np.atleast_1d(np.asarray(self.features, dtype=float)))


class Dataset:
    """Ordered inputs with optional realized outputs and a prior mean.

    ``subset`` returns a view-like Dataset sharing this dataset's identity
    token, so the noise delta keeps firing between a point and itself across
    overlapping views. A freshly constructed Dataset is its own domain:
    covariances against any other dataset carry no noise.
    """

    def __init__(self, X, outputs=None, ids=None, prior_mean=None, _origin=None):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise DimensionMismatch(f"inputs must be (n, d), got shape {X.shape}")
        self.X = X
        n = X.shape[0]
        if ids is None:
            ids = np.arange(n)
        ids = np.asarray(ids, dtype=int)
        if ids.shape != (n,):
            raise DimensionMismatch("ids must align with inputs")
        if np.unique(ids).size != n:
            raise ValueError("ids must be unique within a dataset")
        self.ids = ids
        if outputs is not None:
            outputs = np.asarray(outputs, dtype=float).reshape(-1)
            if outputs.shape != (n,):
                raise DimensionMismatch("outputs must have the same length as inputs")
        self.outputs = outputs
        if prior_mean is not None and not np.isscalar(prior_mean):
            prior_mean = np.asarray(prior_mean, dtype=float).reshape(-1)
            if prior_mean.shape != (n,):
                raise DimensionMismatch("per-point prior mean must align with inputs")
        self.prior_mean = prior_mean
        self._origin = _origin if _origin is not None else object()

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def origin(self):
        return self._origin

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=int)
        outputs = self.outputs[index] if self.outputs is not None else None
        prior = self.prior_mean
        if prior is not None and not np.isscalar(prior):
            prior = prior[index]
        return Dataset(self.X[index], outputs=outputs, ids=self.ids[index],
                       prior_mean=prior, _origin=self._origin)

    def point(self, i: int) -> InputPoint:
        return InputPoint(self.X[i], int(self.ids[i]), origin=self._origin)


def covariance(x: InputPoint, x2: InputPoint, h: Hyperparameters) -> float:
    """SE/ARD covariance between two points, plus noise iff they are the same point."""
    if x.features.size != h.dim or x2.features.size != h.dim:
        raise DimensionMismatch(
            f"feature dims {x.features.size}/{x2.features.size} vs {h.dim} length-scales"
        )
    q = np.sum(((x.features - x2.features) / h.length_scales) ** 2)
    value = h.signal_variance * np.exp(-0.5 * q)
    if x.id == x2.id and x.origin is x2.origin:
        value += h.noise_variance
    return float(value)


def kernel_matrix(XA: np.ndarray, XB: np.ndarray, h: Hyperparameters) -> np.ndarray:
    """Noise-free SE Gram matrix between two feature arrays.

    Evaluated with the broadcast difference form (never the a^2+b^2-2ab BLAS
    trick): each entry is a pure function of its point pair, so a slice of a
    larger request is bitwise-equal to a standalone evaluation. The
    distributed incomplete-Cholesky path relies on this.
    """
    XA = np.asarray(XA, dtype=float)
    XB = np.asarray(XB, dtype=float)
    if XA.ndim == 1:
        XA = XA[None, :]
    if XB.ndim == 1:
        XB = XB[None, :]
    if XA.shape[1] != h.dim or XB.shape[1] != h.dim:
        raise DimensionMismatch(
            f"feature dims {XA.shape[1]}/{XB.shape[1]} vs {h.dim} length-scales"
        )
    na, nb, d = XA.shape[0], XB.shape[0], h.dim
    out = np.empty((na, nb))
    step = na if na * nb * d <= _CHUNK_ELEMS else max(1, _CHUNK_ELEMS // max(1, nb * d))
    for lo in range(0, na, step):
        hi = min(na, lo + step)
        diff = (XA[lo:hi, None, :] - XB[None, :, :]) / h.length_scales
        out[lo:hi] = h.signal_variance * np.exp(-0.5 * np.sum(diff * diff, axis=2))
    return out


def cov_matrix(A: Dataset, B: Dataset, h: Hyperparameters) -> np.ndarray:
    """Covariance matrix between two dataset views; entry (i,j) = covariance(A_i, B_j)."""
    K = kernel_matrix(A.X, B.X, h)
    if A.origin is B.origin:
        same = np.equal.outer(A.ids, B.ids)
        if same.any():
            K[same] += h.noise_variance
    return K


def prior_variances(A: Dataset, h: Hyperparameters) -> np.ndarray:
    """Per-point prior variance; the self-delta makes it signal + noise."""
    return np.full(len(A), h.signal_variance + h.noise_variance)


def resolve_prior_means(train: Dataset, test: Dataset | None = None):
    """Per-point prior mean vectors for training (and test) inputs.

    Defaults to a constant equal to the arithmetic mean of the training
    outputs when no prior mean was supplied; a test set without its own
    prior mean inherits the training constant.
    """
    prior = train.prior_mean
    if prior is None:
        if train.outputs is None:
            raise ValueError("cannot derive a default prior mean without training outputs")
        const = float(np.mean(train.outputs))
        mu_train = np.full(len(train), const)
    elif np.isscalar(prior):
        const = float(prior)
        mu_train = np.full(len(train), const)
    else:
        mu_train = np.asarray(prior, dtype=float)
        const = float(np.mean(mu_train))
    if test is None:
        return mu_train
    tprior = test.prior_mean
    if tprior is None:
        mu_test = np.full(len(test), const)
    elif np.isscalar(tprior):
        mu_test = np.full(len(test), float(tprior))
    else:
        mu_test = np.asarray(tprior, dtype=float)
    return mu_train, mu_test
