"""Centralized low-rank GP predictors.

These are the single-machine counterparts of the worker algorithms: the
support-set predictors replace the training covariance with the projected
kernel G_BB' = Sigma_BS Sigma_SS^-1 Sigma_SB' plus a block-diagonal remainder
L built from Sigma_{Dm Dm|S}, and the incomplete-Cholesky predictor replaces
it with F^T F + noise*I. The summary-only variant uses the projected kernel
for every train/test cross-covariance; the block-aware variant keeps the
exact cross-covariance between a test block and its paired training block.

Means and variances are computed straight from those defining expressions
(one dense block-corrected solve), which makes this module the reference the
distributed implementations are tested against. Opt-in full covariances are
assembled blockwise through the shared per-block formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .fullgp import PredictiveDistribution
from .icf import ICFFactor, icf_factorize, icf_predict, icf_row_update, pivot_argmax
from .kernel import Dataset, Hyperparameters, cov_matrix, prior_variances, resolve_prior_means
from .linalg import DEFAULT_JITTER, chol_factor, chol_solve
from .parallel.summaries import (
    blockaware_block_prediction,
    blockaware_cross_block,
    local_projection,
    summary_block_prediction,
    summary_cross_block,
)

__all__ = [
    "BlockStructure",
    "ICFFactor",
    "icf_factorize",
    "icf_predict",
    "pitc_predict",
    "pic_predict",
]


@dataclass(frozen=True, eq=False)
class BlockStructure:
    """Disjoint M-way split of the training rows (and optionally test rows)."""

    train_blocks: tuple
    test_blocks: tuple | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "train_blocks",
            tuple(np.asarray(b, dtype=int) for b in self.train_blocks),
        )
        if self.test_blocks is not None:
            object.__setattr__(
                self, "test_blocks",
                tuple(np.asarray(b, dtype=int) for b in self.test_blocks),
            )
            if len(self.test_blocks) != len(self.train_blocks):
                raise ValueError("need one test block per training block")
        if not self.train_blocks:
            raise ValueError("need at least one block")

    @property
    def n_blocks(self) -> int:
        return len(self.train_blocks)

    @classmethod
    def even(cls, n_train: int, n_blocks: int, n_test: int | None = None) -> "BlockStructure":
        """Contiguous near-even blocks; the last absorbs any remainder."""
        if not (1 <= n_blocks <= n_train):
            raise ValueError(f"block count must be in [1, {n_train}]")

        def cuts(n):
            base = n // n_blocks
            sizes = [base] * n_blocks
            sizes[-1] += n - base * n_blocks
            edges = np.cumsum([0] + sizes)
            return tuple(np.arange(edges[i], edges[i + 1]) for i in range(n_blocks))

        return cls(cuts(n_train), cuts(n_test) if n_test is not None else None)

    @classmethod
    def from_assignments(cls, assignments) -> "BlockStructure":
        ordered = sorted(assignments, key=lambda a: a.worker_id)
        return cls(
            tuple(a.train_index for a in ordered),
            tuple(a.test_index for a in ordered),
        )

    def validate(self, train: Dataset, tests: Dataset | None = None) -> None:
        joined = np.concatenate(self.train_blocks)
        if len(np.unique(joined)) != joined.size or joined.size != len(train):
            raise ValueError("training blocks are not a disjoint cover")
        if tests is not None and self.test_blocks is not None:
            joined = np.concatenate(self.test_blocks)
            if len(np.unique(joined)) != joined.size or joined.size != len(tests):
                raise ValueError("test blocks are not a disjoint cover")


def _support_dataset(support) -> Dataset:
    return support.dataset if hasattr(support, "dataset") else support


def _projected_system(train, test, support_ds, h, blocks, jitter):
    """Shared pieces: factors, cross-covariances, and G_DD + L."""
    cov_support_train = cov_matrix(support_ds, train, h)
    cov_support_test = cov_matrix(support_ds, test, h)
    fac_support = chol_factor(cov_matrix(support_ds, support_ds, h), "Sigma_SS", jitter)
    back_train = chol_solve(fac_support, cov_support_train)
    projected_dd = cov_support_train.T @ back_train
    system = projected_dd.copy()
    for m, idx in enumerate(blocks.train_blocks, start=1):
        view = train.subset(idx)
        cross = np.ix_(idx, idx)
        system[cross] += cov_matrix(view, view, h) - projected_dd[cross]
    fac_system = chol_factor(system, "Gamma_DD+Lambda", jitter)
    return cov_support_train, cov_support_test, fac_support, back_train, fac_system


def _blockwise_full_cov(kind, train, test, support_ds, h, blocks, mu_train, jitter,
                        fac_support, global_factor):
    """Assemble the full posterior covariance from per-block and cross-block parts."""
    n = len(test)
    cov = np.empty((n, n))
    blocks_test = blocks.test_blocks
    cov_support_tests = [
        cov_matrix(support_ds, test.subset(idx), h) for idx in blocks_test
    ]
    test_views = [test.subset(idx) for idx in blocks_test]
    phi_blocks = []
    if kind == "blockaware":
        for m, didx in enumerate(blocks.train_blocks):
            view = train.subset(didx)
            local, terms = local_projection(
                view, mu_train[didx], support_ds, h, jitter=jitter,
                owner=m + 1, tests_view=test_views[m],
            )
            phi_blocks.append((local, terms))
    for i in range(blocks.n_blocks):
        for j in range(blocks.n_blocks):
            cov_ij = cov_matrix(test_views[i], test_views[j], h)
            if kind == "summary":
                block = summary_cross_block(
                    cov_ij, cov_support_tests[i], cov_support_tests[j],
                    fac_support, global_factor,
                )
            elif i == j:
                local, terms = phi_blocks[i]
                _, _, block, _ = blockaware_block_prediction(
                    np.zeros(len(test_views[i])), cov_support_tests[i], fac_support,
                    global_factor, np.zeros(len(support_ds)), local, terms,
                    prior_var=None, tests_view=test_views[i], h=h, want_full_cov=True,
                )
            else:
                from .parallel.summaries import block_correction_matrix

                phi_i = block_correction_matrix(
                    cov_support_tests[i], fac_support, *phi_blocks[i]
                )
                phi_j = block_correction_matrix(
                    cov_support_tests[j], fac_support, *phi_blocks[j]
                )
                block = blockaware_cross_block(
                    cov_ij, cov_support_tests[i], cov_support_tests[j],
                    phi_i, phi_j, fac_support, global_factor,
                )
            cov[np.ix_(blocks_test[i], blocks_test[j])] = block
    return cov


def pitc_predict(train: Dataset, test: Dataset, support, blocks: BlockStructure,
                 h: Hyperparameters, want_full_cov: bool = False,
                 jitter: float = DEFAULT_JITTER) -> PredictiveDistribution:
    """Summary-only low-rank prediction (training blocks independent given S)."""
    if train.outputs is None:
        raise ValueError("training dataset has no realized outputs")
    support_ds = _support_dataset(support)
    if len(support_ds) == 0:
        raise ValueError("support set is empty")
    blocks.validate(train, test if want_full_cov else None)
    mu_train, mu_test = resolve_prior_means(train, test)
    cov_support_train, cov_support_test, fac_support, back_train, fac_system = \
        _projected_system(train, test, support_ds, h, blocks, jitter)
    projected_ud = cov_support_test.T @ back_train
    mean = mu_test + projected_ud @ chol_solve(fac_system, train.outputs - mu_train)
    through = chol_solve(fac_system, projected_ud.T)
    variance = prior_variances(test, h) - np.einsum("ud,du->u", projected_ud, through)
    cov = None
    if want_full_cov:
        if blocks.test_blocks is None:
            raise ValueError("full covariance needs a test-block structure")
        gross = cov_matrix(support_ds, support_ds, h) + cov_support_train @ _lambda_solve(
            train, support_ds, h, blocks, cov_support_train, back_train, jitter
        )
        fac_global = chol_factor(gross, "Sigma_ddot_SS", jitter)
        cov = _blockwise_full_cov("summary", train, test, support_ds, h, blocks,
                                  mu_train, jitter, fac_support, fac_global)
        variance = np.diag(cov).copy()
    return PredictiveDistribution(mean, variance, test.ids.copy(), covariance=cov)


def _lambda_solve(train, support_ds, h, blocks, cov_support_train, back, jitter):
    """Lambda^-1 Sigma_DS computed blockwise (Lambda is block diagonal)."""
    out = np.empty((len(train), len(cov_support_train)))
    for m, idx in enumerate(blocks.train_blocks, start=1):
        view = train.subset(idx)
        deflated = cov_matrix(view, view, h) - cov_support_train[:, idx].T @ back[:, idx]
        fac_block = chol_factor(deflated, f"Sigma_D{m}D{m}|S", jitter)
        out[idx] = chol_solve(fac_block, cov_support_train[:, idx].T)
    return out


def pic_predict(train: Dataset, test: Dataset, support, blocks: BlockStructure,
                h: Hyperparameters, want_full_cov: bool = False,
                jitter: float = DEFAULT_JITTER) -> PredictiveDistribution:
    """Block-aware low-rank prediction: each test block stays exactly
    correlated with its paired training block, and blocks are independent
    given the support set."""
    if train.outputs is None:
        raise ValueError("training dataset has no realized outputs")
    if blocks.test_blocks is None:
        raise ValueError("this predictor needs aligned training/test blocks")
    support_ds = _support_dataset(support)
    if len(support_ds) == 0:
        raise ValueError("support set is empty")
    blocks.validate(train, test)
    mu_train, mu_test = resolve_prior_means(train, test)
    cov_support_train, cov_support_test, fac_support, back_train, fac_system = \
        _projected_system(train, test, support_ds, h, blocks, jitter)
    # Blockwise kernel: projected everywhere except each (Ui, Di) pair.
    mixed_ud = cov_support_test.T @ back_train
    for uidx, didx in zip(blocks.test_blocks, blocks.train_blocks):
        mixed_ud[np.ix_(uidx, didx)] = cov_matrix(test.subset(uidx), train.subset(didx), h)
    mean = mu_test + mixed_ud @ chol_solve(fac_system, train.outputs - mu_train)
    through = chol_solve(fac_system, mixed_ud.T)
    variance = prior_variances(test, h) - np.einsum("ud,du->u", mixed_ud, through)
    cov = None
    if want_full_cov:
        gross = cov_matrix(support_ds, support_ds, h) + cov_support_train @ _lambda_solve(
            train, support_ds, h, blocks, cov_support_train, back_train, jitter
        )
        fac_global = chol_factor(gross, "Sigma_ddot_SS", jitter)
        cov = _blockwise_full_cov("blockaware", train, test, support_ds, h, blocks,
                                  mu_train, jitter, fac_support, fac_global)
        variance = np.diag(cov).copy()
    return PredictiveDistribution(mean, variance, test.ids.copy(), covariance=cov)
