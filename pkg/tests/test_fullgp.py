import numpy as np
import pytest

from pargp import Dataset, Hyperparameters, cov_matrix, fgp_predict
from pargp.errors import ConditioningError
from pargp.harness import generate_synthetic

from conftest import make_dataset
from oracles import explicit_fgp


def test_far_test_point_returns_prior(hyp1d):
    train = Dataset(np.array([[0.0], [0.1]]), outputs=[1.0, 1.2], prior_mean=0.5)
    test = Dataset(np.array([[50.0]]), prior_mean=0.5)
    pred = fgp_predict(train, test, hyp1d)
    assert pred.mean[0] == pytest.approx(0.5, abs=1e-12)
    assert pred.variance[0] == pytest.approx(1.1, abs=1e-12)


def test_interpolation_in_small_noise_limit():
    h = Hyperparameters(1.0, 1e-10, [0.3])
    train = Dataset(np.array([[0.2], [0.8]]), outputs=[1.5, -0.7], prior_mean=0.0)
    test = Dataset(np.array([[0.2]]), prior_mean=0.0)
    pred = fgp_predict(train, test, h)
    assert pred.mean[0] == pytest.approx(1.5, abs=1e-6)
    assert pred.variance[0] == pytest.approx(0.0, abs=1e-6)


def test_matches_explicit_inverse_oracle(hyp2d):
    train = make_dataset(8, 2, seed=11)
    test = make_dataset(3, 2, seed=12)
    pred = fgp_predict(train, test, hyp2d, want_full_cov=True)
    mean, cov = explicit_fgp(train, test, hyp2d, want_full_cov=True)
    assert np.allclose(pred.mean, mean, rtol=1e-10, atol=1e-13)
    assert np.allclose(pred.covariance, cov, rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_posterior_variance_below_prior(seed, hyp2d):
    train, test = generate_synthetic(30, 10, 2, hyp2d, seed=seed)
    pred = fgp_predict(train, test, hyp2d)
    prior = hyp2d.signal_variance + hyp2d.noise_variance
    assert np.all(pred.variance <= prior + 1e-10)
    assert np.all(pred.variance > 0)


def test_full_covariance_symmetric_and_near_psd(hyp2d):
    train, test = generate_synthetic(25, 8, 2, hyp2d, seed=5)
    pred = fgp_predict(train, test, hyp2d, want_full_cov=True)
    C = pred.covariance
    assert np.allclose(C, C.T, atol=1e-12)
    eigs = np.linalg.eigvalsh(C)
    prior_norm = np.linalg.norm(cov_matrix(test, test, hyp2d), 2)
    assert eigs.min() >= -1e-8 * prior_norm
    assert np.allclose(np.diag(C), pred.variance, atol=0)


def test_adding_training_point_never_raises_variance(hyp1d):
    full, test = generate_synthetic(12, 6, 1, hyp1d, seed=9)
    prev = None
    for n in range(4, 13, 2):
        sub = full.subset(np.arange(n))
        var = fgp_predict(sub, test, hyp1d).variance
        if prev is not None:
            assert np.all(var <= prev + 1e-10)
        prev = var


def test_requires_outputs_and_nonempty_test(hyp1d):
    train = Dataset(np.array([[0.0]]), outputs=[1.0])
    with pytest.raises(ValueError):
        fgp_predict(Dataset(np.array([[0.0]])), Dataset(np.array([[1.0]])), hyp1d)
    with pytest.raises(ValueError):
        fgp_predict(train, Dataset(np.zeros((0, 1))), hyp1d)


def test_conditioning_error_names_matrix():
    h = Hyperparameters(1.0, 1e-16, [0.3])
    X = np.array([[0.5], [0.5], [0.5]])  # identical inputs, ~zero noise
    train = Dataset(X, outputs=[1.0, 1.0, 1.0])
    test = Dataset(np.array([[0.6]]))
    with pytest.raises(ConditioningError) as err:
        fgp_predict(train, test, h, jitter=0.0)
    assert "Sigma_DD" in str(err.value)


def test_prior_mean_defaults_to_output_mean(hyp1d):
    train = Dataset(np.array([[0.0], [0.1]]), outputs=[2.0, 4.0])
    test = Dataset(np.array([[80.0]]))
    pred = fgp_predict(train, test, hyp1d)
    assert pred.mean[0] == pytest.approx(3.0, abs=1e-12)
