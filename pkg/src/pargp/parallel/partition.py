"""Assigning training and test data to workers.

``partition_random`` deals a seeded shuffle into M near-even blocks (the last
block absorbs any remainder). ``partition_clustered`` refines that in one
round: every worker nominates a random cluster center from its block, and
all training and test inputs are re-dealt to the nearest center that still
has capacity — capped at ceil(|D|/M) and ceil(|U|/M) so no worker is
overloaded. Block index arrays are kept sorted ascending, which pins down
tie-breaking and reduction order everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernel import Dataset
from .messaging import MessageLog, Transport


@dataclass(frozen=True, eq=False)
class WorkerAssignment:
    """One worker's slice of the problem: id, local data, local test inputs."""

    worker_id: int
    train: Dataset
    tests: Dataset
    train_index: np.ndarray
    test_index: np.ndarray


def _even_split_sizes(n: int, m: int) -> list[int]:
    base = n // m
    sizes = [base] * m
    sizes[-1] += n - base * m
    return sizes


def _split_indices(n: int, m: int, rng) -> list[np.ndarray]:
    perm = rng.permutation(n)
    blocks = []
    start = 0
    for size in _even_split_sizes(n, m):
        blocks.append(np.sort(perm[start:start + size]))
        start += size
    return blocks


def _build_assignments(train, tests, train_blocks, test_blocks):
    out = []
    for m, (didx, uidx) in enumerate(zip(train_blocks, test_blocks), start=1):
        out.append(
            WorkerAssignment(
                worker_id=m,
                train=train.subset(didx),
                tests=tests.subset(uidx),
                train_index=didx,
                test_index=uidx,
            )
        )
    return out


def partition_random(train: Dataset, tests: Dataset, n_workers: int, seed: int,
                     log: MessageLog | None = None) -> list[WorkerAssignment]:
    """Seeded even split of training and test inputs across workers."""
    if n_workers < 1:
        raise ValueError("need at least one worker")
    if n_workers > len(train):
        raise ValueError(f"{n_workers} workers but only {len(train)} training points")
    rng = np.random.default_rng(seed)
    train_blocks = _split_indices(len(train), n_workers, rng)
    test_blocks = _split_indices(len(tests), n_workers, rng)
    return _build_assignments(train, tests, train_blocks, test_blocks)


def _capacity_assign(distances: np.ndarray, capacity: int) -> np.ndarray:
    """Assign each row to a column, nearest first, respecting a per-column cap.

    Sweeps all (point, center) pairs in ascending distance (ties: point
    index, then center index); a point takes the first center in its own
    distance order that still has room when the sweep reaches it.
    """
    n, m = distances.shape
    owner = np.full(n, -1)
    remaining = np.full(m, capacity)
    unplaced = n
    for flat in np.argsort(distances, axis=None, kind="stable"):
        p, c = divmod(int(flat), m)
        if owner[p] < 0 and remaining[c] > 0:
            owner[p] = c
            remaining[c] -= 1
            unplaced -= 1
            if unplaced == 0:
                break
    return owner


def partition_clustered(train: Dataset, tests: Dataset, n_workers: int, seed: int,
                        log: MessageLog | None = None) -> list[WorkerAssignment]:
    """One clustering round on top of a random partition.

    Each worker draws a random center from its local block and announces it;
    every input then moves to the nearest center with spare capacity. The
    moved points (and the center announcements) are charged to the message
    log when one is supplied.
    """
    assignments = partition_random(train, tests, n_workers, seed)
    d = train.dim
    rng = np.random.default_rng([seed, 1])
    center_rows = []
    for a in assignments:
        pick = int(rng.integers(len(a.train_index)))
        center_rows.append(a.train_index[pick])
    centers = train.X[np.asarray(center_rows)]

    transport = Transport(n_workers, log) if log is not None else None
    if transport is not None:
        for m in range(1, n_workers + 1):
            transport.broadcast("partition", "center", scalars=d, root=m)

    def _distances(X):
        diff = X[:, None, :] - centers[None, :, :]
        return np.sum(diff * diff, axis=2)

    train_owner = _capacity_assign(_distances(train.X), -(-len(train) // n_workers))
    test_owner = (
        _capacity_assign(_distances(tests.X), -(-len(tests) // n_workers))
        if len(tests)
        else np.zeros(0, dtype=int)
    )

    prev_train_owner = np.empty(len(train), dtype=int)
    prev_test_owner = np.empty(len(tests), dtype=int)
    for a in assignments:
        prev_train_owner[a.train_index] = a.worker_id - 1
        prev_test_owner[a.test_index] = a.worker_id - 1

    if transport is not None:
        for src in range(n_workers):
            for dst in range(n_workers):
                if src == dst:
                    continue
                moved_train = int(np.sum((prev_train_owner == src) & (train_owner == dst)))
                moved_tests = int(np.sum((prev_test_owner == src) & (test_owner == dst)))
                if moved_train:
                    transport.point_to_point(
                        "partition", "train_points", src + 1, dst + 1,
                        scalars=moved_train * (d + 1),
                    )
                if moved_tests:
                    transport.point_to_point(
                        "partition", "test_points", src + 1, dst + 1,
                        scalars=moved_tests * d,
                    )

    train_blocks = [np.flatnonzero(train_owner == c) for c in range(n_workers)]
    test_blocks = [np.flatnonzero(test_owner == c) for c in range(n_workers)]
    return _build_assignments(train, tests, train_blocks, test_blocks)


def validate_assignments(assignments, train: Dataset, tests: Dataset) -> None:
    """Check the worker blocks are disjoint and jointly cover both datasets."""
    ids = sorted(a.worker_id for a in assignments)
    if ids != list(range(1, len(assignments) + 1)):
        raise ValueError(f"worker ids must be 1..M, got {ids}")
    all_train = np.concatenate([a.train_index for a in assignments])
    all_tests = np.concatenate([a.test_index for a in assignments])
    if len(np.unique(all_train)) != len(all_train) or len(all_train) != len(train):
        raise ValueError("training blocks are not a disjoint cover of the data")
    if len(np.unique(all_tests)) != len(all_tests) or len(all_tests) != len(tests):
        raise ValueError("test blocks are not a disjoint cover of the test inputs")
