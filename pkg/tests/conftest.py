import numpy as np
import pytest

from pargp import Dataset, Hyperparameters


@pytest.fixture
def hyp1d():
    return Hyperparameters(1.0, 0.1, np.array([0.3]))


@pytest.fixture
def hyp2d():
    return Hyperparameters(1.5, 0.05, np.array([0.4, 0.25]))


def make_dataset(n, d, seed, h=None, with_outputs=True, prior_mean=0.0):
    """Random inputs on the unit cube with standard-normal outputs.

    Outputs are generic (not GP-consistent); use harness.generate_synthetic
    where well-specified draws matter.
    """
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = rng.standard_normal(n) if with_outputs else None
    return Dataset(X, outputs=y, prior_mean=prior_mean)


@pytest.fixture
def make_data():
    return make_dataset
