import numpy as np
import pytest

from pargp import Dataset, MessageLog, partition_clustered, partition_random
from pargp.parallel import validate_assignments
from pargp.parallel.messaging import message_totals

from conftest import make_dataset
from oracles import greedy_fill_assign


def _coverage(assignments, train, tests):
    train_union = np.sort(np.concatenate([a.train_index for a in assignments]))
    test_union = np.sort(np.concatenate([a.test_index for a in assignments]))
    assert np.array_equal(train_union, np.arange(len(train)))
    assert np.array_equal(test_union, np.arange(len(tests)))
    validate_assignments(assignments, train, tests)


def test_single_worker_gets_everything():
    train = make_dataset(9, 2, seed=0)
    tests = make_dataset(4, 2, seed=1, with_outputs=False)
    (a,) = partition_random(train, tests, 1, seed=0)
    assert a.worker_id == 1
    assert len(a.train) == 9 and len(a.tests) == 4


def test_even_split_sizes():
    train = make_dataset(100, 2, seed=2)
    tests = make_dataset(20, 2, seed=3, with_outputs=False)
    parts = partition_random(train, tests, 4, seed=0)
    assert [len(a.train) for a in parts] == [25, 25, 25, 25]
    _coverage(parts, train, tests)


def test_remainder_goes_to_last_block():
    train = make_dataset(10, 2, seed=4)
    tests = make_dataset(5, 2, seed=5, with_outputs=False)
    parts = partition_random(train, tests, 3, seed=7)
    assert [len(a.train) for a in parts] == [3, 3, 4]
    _coverage(parts, train, tests)


def test_partition_errors():
    train = make_dataset(3, 1, seed=6)
    tests = make_dataset(2, 1, seed=7, with_outputs=False)
    with pytest.raises(ValueError):
        partition_random(train, tests, 4, seed=0)
    with pytest.raises(ValueError):
        partition_random(train, tests, 0, seed=0)


def test_partition_deterministic():
    train = make_dataset(30, 2, seed=8)
    tests = make_dataset(10, 2, seed=9, with_outputs=False)
    a = partition_random(train, tests, 4, seed=11)
    b = partition_random(train, tests, 4, seed=11)
    for x, y in zip(a, b):
        assert np.array_equal(x.train_index, y.train_index)
        assert np.array_equal(x.test_index, y.test_index)


def test_clustered_single_worker_is_identity():
    train = make_dataset(12, 2, seed=10)
    tests = make_dataset(4, 2, seed=11, with_outputs=False)
    (a,) = partition_clustered(train, tests, 1, seed=0)
    assert np.array_equal(a.train_index, np.arange(12))
    assert np.array_equal(a.test_index, np.arange(4))


def test_clustered_separates_two_blobs():
    rng = np.random.default_rng(0)
    blob_a = rng.normal(0.0, 0.02, size=(10, 2))
    blob_b = rng.normal(5.0, 0.02, size=(10, 2))
    X = np.vstack([blob_a, blob_b])
    train = Dataset(X, outputs=np.zeros(20))
    tests = Dataset(np.vstack([blob_a[:2] + 0.01, blob_b[:2] + 0.01]))
    parts = partition_clustered(train, tests, 2, seed=3)
    _coverage(parts, train, tests)
    for a in parts:
        first_coords = train.X[a.train_index][:, 0]
        assert np.all(first_coords < 2.5) or np.all(first_coords > 2.5)
        if len(a.test_index):
            test_coords = tests.X[a.test_index][:, 0]
            side = first_coords.mean() > 2.5
            assert np.all((test_coords > 2.5) == side)


def test_clustered_matches_greedy_fill_oracle():
    train = make_dataset(23, 2, seed=12)
    tests = make_dataset(9, 2, seed=13, with_outputs=False)
    M, seed = 3, 21
    parts = partition_clustered(train, tests, M, seed=seed)
    _coverage(parts, train, tests)
    # reproduce the centers the same way the implementation draws them
    base = partition_random(train, tests, M, seed=seed)
    rng = np.random.default_rng([seed, 1])
    centers = np.vstack(
        [a.train_index[int(rng.integers(len(a.train_index)))] for a in base]
    )
    centers = train.X[centers.ravel()]

    def dists(X):
        diff = X[:, None, :] - centers[None, :, :]
        return np.sum(diff * diff, axis=2)

    train_owner = greedy_fill_assign(dists(train.X), -(-len(train) // M))
    test_owner = greedy_fill_assign(dists(tests.X), -(-len(tests) // M))
    for a in parts:
        assert np.array_equal(a.train_index, np.flatnonzero(train_owner == a.worker_id - 1))
        assert np.array_equal(a.test_index, np.flatnonzero(test_owner == a.worker_id - 1))


def test_capacity_stress_spills_by_distance_rank():
    # every point closest to center of worker 1's only training point cluster
    X = np.vstack([[0.0, 0.0], *[[0.001 * i, 0.0] for i in range(1, 12)]])
    train = Dataset(X, outputs=np.zeros(12))
    tests = Dataset(np.zeros((0, 2)))
    parts = partition_clustered(train, tests, 3, seed=0)
    sizes = sorted(len(a.train_index) for a in parts)
    assert max(sizes) == 4  # ceil(12/3)
    assert sum(sizes) == 12
    _coverage(parts, train, tests)


def test_clustered_logs_centers_and_moves():
    train = make_dataset(16, 2, seed=14)
    tests = make_dataset(8, 2, seed=15, with_outputs=False)
    log = MessageLog()
    partition_clustered(train, tests, 4, seed=5, log=log)
    totals = message_totals(log, "partition")
    assert totals.tag_scalars("center") == 4 * 3 * 2  # 4 roots, 3 tree edges, d=2
    assert totals.tag_scalars("train_points") % 3 == 0  # d+1 scalars per moved point
    log1 = MessageLog()
    partition_clustered(train, tests, 1, seed=5, log=log1)
    assert len(log1.records) == 0
