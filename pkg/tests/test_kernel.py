import numpy as np
import pytest

from pargp import Dataset, Hyperparameters, InputPoint, cov_matrix, covariance
from pargp.errors import DimensionMismatch

from conftest import make_dataset
from oracles import loop_cov_matrix


def test_same_point_adds_noise():
    h = Hyperparameters(1.0, 0.1, [1.0])
    x = InputPoint([0.0], id=0)
    assert covariance(x, x, h) == pytest.approx(1.1, rel=1e-14)


def test_unit_distance_value():
    h = Hyperparameters(1.0, 0.1, [1.0])
    a, b = InputPoint([0.0], id=0), InputPoint([1.0], id=1)
    assert covariance(a, b, h) == pytest.approx(np.exp(-0.5), rel=1e-14)


def test_ard_two_dims():
    h = Hyperparameters(2.0, 0.1, [2.0, 1.0])
    a, b = InputPoint([1.0, 2.0], id=0), InputPoint([3.0, 1.0], id=1)
    # scaled squared distance: (2/2)^2 + (1/1)^2 = 2
    assert covariance(a, b, h) == pytest.approx(2.0 * np.exp(-1.0), rel=1e-14)


def test_covariance_dim_mismatch():
    h = Hyperparameters(1.0, 0.1, [1.0, 1.0])
    with pytest.raises(DimensionMismatch):
        covariance(InputPoint([0.0], id=0), InputPoint([1.0], id=1), h)


def test_cov_matrix_single_point():
    h = Hyperparameters(1.0, 0.1, [1.0])
    ds = Dataset(np.array([[0.5]]))
    assert cov_matrix(ds, ds, h) == pytest.approx(np.array([[1.1]]))


def test_cov_matrix_separated_points():
    h = Hyperparameters(1.0, 0.1, [0.05])
    ds = Dataset(np.array([[0.0], [1.0]]))
    K = cov_matrix(ds, ds, h)
    assert K[0, 0] == pytest.approx(1.1)
    assert K[1, 1] == pytest.approx(1.1)
    assert abs(K[0, 1]) < 1e-30


def test_cov_matrix_matches_entrywise_oracle(hyp2d):
    ds = make_dataset(5, 2, seed=3)
    other = make_dataset(4, 2, seed=4)
    assert np.allclose(cov_matrix(ds, ds, hyp2d), loop_cov_matrix(ds, ds, hyp2d),
                       rtol=0, atol=1e-15)
    assert np.allclose(cov_matrix(ds, other, hyp2d), loop_cov_matrix(ds, other, hyp2d),
                       rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_gram_symmetric_and_positive_definite(seed, hyp2d):
    ds = make_dataset(12, 2, seed=seed)
    K = cov_matrix(ds, ds, hyp2d)
    assert np.array_equal(K, K.T)
    np.linalg.cholesky(K)  # raises if not PD


@pytest.mark.parametrize("seed", [5, 6])
def test_cross_matrix_transpose(seed, hyp2d):
    a = make_dataset(6, 2, seed=seed)
    b = make_dataset(9, 2, seed=seed + 100)
    assert np.array_equal(cov_matrix(a, b, hyp2d), cov_matrix(b, a, hyp2d).T)


def test_shrinking_length_scale_never_raises_offdiag():
    ds = make_dataset(8, 2, seed=7)
    wide = Hyperparameters(1.0, 0.1, [0.5, 0.5])
    narrow = Hyperparameters(1.0, 0.1, [0.2, 0.5])
    off = ~np.eye(8, dtype=bool)
    assert np.all(cov_matrix(ds, ds, narrow)[off] <= cov_matrix(ds, ds, wide)[off] + 1e-15)


def test_duplicate_features_distinct_ids_no_cross_noise():
    h = Hyperparameters(1.0, 0.1, [1.0])
    ds = Dataset(np.array([[0.3], [0.3]]))
    K = cov_matrix(ds, ds, h)
    assert K[0, 1] == pytest.approx(1.0, rel=1e-14)  # pure signal, no delta
    assert K[0, 0] == pytest.approx(1.1, rel=1e-14)


def test_subset_shares_identity_with_parent():
    h = Hyperparameters(1.0, 0.1, [1.0])
    ds = make_dataset(5, 1, seed=0)
    view_a = ds.subset([0, 1, 2])
    view_b = ds.subset([2, 3])
    K = cov_matrix(view_a, view_b, h)
    # point 2 appears in both views: the delta fires off-diagonally
    pure = np.exp(-0.5 * ((view_a.X[2, 0] - view_b.X[0, 0]) / 1.0) ** 2)
    assert K[2, 0] == pytest.approx(pure + 0.1, rel=1e-12)
    # fresh datasets with equal features never see each other's noise
    fresh = Dataset(view_b.X.copy())
    assert cov_matrix(view_a, fresh, h)[2, 0] == pytest.approx(1.0 + 0.0, abs=0.11)


def test_hyperparameters_validation():
    with pytest.raises(ValueError):
        Hyperparameters(0.0, 0.1, [1.0])
    with pytest.raises(ValueError):
        Hyperparameters(1.0, -0.1, [1.0])
    with pytest.raises(ValueError):
        Hyperparameters(1.0, 0.1, [1.0, -1.0])


def test_hyperparameters_config_roundtrip(tmp_path):
    h = Hyperparameters(1.25, 0.075, [0.3, 0.41])
    path = tmp_path / "hyp.cfg"
    h.to_file(path)
    back = Hyperparameters.from_file(path)
    assert back.signal_variance == h.signal_variance
    assert back.noise_variance == h.noise_variance
    assert np.array_equal(back.length_scales, h.length_scales)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 1)), ids=[0, 0, 1])
    with pytest.raises(DimensionMismatch):
        Dataset(np.zeros((3, 1)), outputs=[1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        Dataset(np.zeros((3, 1)), prior_mean=[0.0, 0.0])
