import numpy as np
import pytest

from pargp import (
    BlockStructure,
    Hyperparameters,
    fgp_predict,
    pic_predict,
    pitc_predict,
    select_support,
)
from pargp.errors import ConditioningError
from pargp.harness import generate_synthetic

from oracles import dense_pic, dense_pitc


def _instance(n_train, n_test, d, seed, h):
    train, test = generate_synthetic(n_train, n_test, d, h, seed=seed)
    return train, test


def test_pic_single_block_collapses_to_fgp(hyp2d):
    train, test = _instance(40, 10, 2, 3, hyp2d)
    support = select_support(train, 6, hyp2d)
    blocks = BlockStructure.even(len(train), 1, len(test))
    pred = pic_predict(train, test, support, blocks, hyp2d)
    full = fgp_predict(train, test, hyp2d)
    assert np.allclose(pred.mean, full.mean, rtol=1e-8, atol=1e-12)
    assert np.allclose(pred.variance, full.variance, rtol=1e-8, atol=1e-12)


def test_pitc_single_block_matches_dense_oracle_not_fgp(hyp2d):
    """With one block the corrected system equals the exact Gram matrix, but
    the projected train/test cross-covariance keeps the summary-only
    predictor away from the exact GP (only the block-aware one collapses)."""
    train, test = _instance(40, 10, 2, 4, hyp2d)
    support = select_support(train, 6, hyp2d)
    blocks = BlockStructure.even(len(train), 1, len(test))
    pred = pitc_predict(train, test, support, blocks, hyp2d)
    mean, var = dense_pitc(train, test, support, blocks, hyp2d)
    assert np.allclose(pred.mean, mean, rtol=1e-8, atol=1e-11)
    assert np.allclose(pred.variance, var, rtol=1e-8, atol=1e-11)
    full = fgp_predict(train, test, hyp2d)
    assert not np.allclose(pred.mean, full.mean, rtol=1e-3, atol=1e-6)


def test_pitc_with_complete_support_approaches_fgp():
    # With S spanning the training inputs the projection becomes lossless as
    # noise vanishes. The projection error peaks on Gram eigendirections with
    # eigenvalue near the noise floor, so the check needs a well-conditioned
    # Gram matrix (short length-scale) and tiny noise.
    h = Hyperparameters(1.0, 1e-8, [0.03])
    train, test = _instance(8, 6, 1, 5, h)
    support = select_support(train, len(train), h)
    blocks = BlockStructure.even(len(train), 2, len(test))
    pred = pitc_predict(train, test, support, blocks, h)
    full = fgp_predict(train, test, h)
    assert np.allclose(pred.mean, full.mean, rtol=1e-6, atol=1e-6)
    assert np.allclose(pred.variance, full.variance, rtol=1e-6, atol=1e-6)


def test_pitc_matches_dense_transcription(hyp2d):
    train, test = _instance(64, 16, 2, 7, hyp2d)
    support = select_support(train, 8, hyp2d)
    blocks = BlockStructure.even(64, 4, 16)
    pred = pitc_predict(train, test, support, blocks, hyp2d)
    mean, var = dense_pitc(train, test, support, blocks, hyp2d)
    assert np.allclose(pred.mean, mean, rtol=1e-8, atol=1e-11)
    assert np.allclose(pred.variance, var, rtol=1e-8, atol=1e-11)


def test_pic_matches_dense_transcription(hyp2d):
    train, test = _instance(64, 16, 2, 8, hyp2d)
    support = select_support(train, 8, hyp2d)
    blocks = BlockStructure.even(64, 4, 16)
    pred = pic_predict(train, test, support, blocks, hyp2d)
    mean, var = dense_pic(train, test, support, blocks, hyp2d)
    assert np.allclose(pred.mean, mean, rtol=1e-8, atol=1e-11)
    assert np.allclose(pred.variance, var, rtol=1e-8, atol=1e-11)


def test_full_covariances_match_dense_oracles(hyp2d):
    train, test = _instance(48, 12, 2, 9, hyp2d)
    support = select_support(train, 6, hyp2d)
    blocks = BlockStructure.even(48, 3, 12)
    pred_pitc = pitc_predict(train, test, support, blocks, hyp2d, want_full_cov=True)
    _, cov_pitc = dense_pitc(train, test, support, blocks, hyp2d, want_full_cov=True)
    assert np.allclose(pred_pitc.covariance, cov_pitc, rtol=1e-8, atol=1e-10)
    assert np.allclose(pred_pitc.covariance, pred_pitc.covariance.T, atol=1e-10)
    pred_pic = pic_predict(train, test, support, blocks, hyp2d, want_full_cov=True)
    _, cov_pic = dense_pic(train, test, support, blocks, hyp2d, want_full_cov=True)
    assert np.allclose(pred_pic.covariance, cov_pic, rtol=1e-8, atol=1e-10)
    assert np.allclose(pred_pic.covariance, pred_pic.covariance.T, atol=1e-10)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("m", [2, 4])
def test_variances_nonnegative_and_below_prior(seed, m, hyp2d):
    train, test = _instance(48, 16, 2, seed, hyp2d)
    support = select_support(train, 8, hyp2d)
    blocks = BlockStructure.even(48, m, 16)
    prior = hyp2d.signal_variance + hyp2d.noise_variance
    for fn in (pitc_predict, pic_predict):
        var = fn(train, test, support, blocks, hyp2d).variance
        assert np.all(var >= -1e-10)
        assert np.all(var <= prior + 1e-8)


# A qualitative observation (not asserted): when every test block is far from
# its paired training block, the block-aware corrections vanish and the
# block-aware predictor approaches the summary-only one on the same partition.


def test_block_structure_validation(hyp2d):
    train, test = _instance(20, 5, 2, 10, hyp2d)
    support = select_support(train, 4, hyp2d)
    bad = BlockStructure((np.arange(10),), None)  # does not cover
    with pytest.raises(ValueError):
        pitc_predict(train, test, support, bad, hyp2d)
    with pytest.raises(ValueError):
        pic_predict(train, test, support, BlockStructure.even(20, 2), hyp2d)
    with pytest.raises(ValueError):
        BlockStructure.even(4, 8)


def test_conditioning_error_names_block():
    h = Hyperparameters(1.0, 1e-16, [0.3])
    X = np.vstack([np.full((3, 1), 0.5), np.random.default_rng(0).random((3, 1))])
    train_ds = __import__("pargp").Dataset(X, outputs=np.ones(6), prior_mean=0.0)
    test_ds = __import__("pargp").Dataset(np.array([[0.9]]), prior_mean=0.0)
    support = select_support(train_ds, 2, h)
    blocks = BlockStructure.even(6, 2, 1)
    with pytest.raises(ConditioningError):
        pitc_predict(train_ds, test_ds, support, blocks, h, jitter=0.0)
