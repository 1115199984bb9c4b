"""Local and global summaries, and the per-block prediction formulas.

A worker's local summary projects its data onto the common support set:

    y_dot_B     = Sigma_B,Dm  Sigma_{Dm Dm|S}^-1 (y_Dm - mu_Dm)
    Sigma_dot_B,B' = Sigma_B,Dm Sigma_{Dm Dm|S}^-1 Sigma_Dm,B'

with B = S for the summary itself and B = Um for the locally retained terms
the block-aware predictor needs. The master fuses summaries additively
(ascending worker order, so results are bitwise reproducible) into the
global summary, which is all a worker needs to predict its block.

The incomplete-Cholesky variants project through the worker's factor columns
instead of the support set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..kernel import Dataset, Hyperparameters, cov_matrix, prior_variances
from ..linalg import DEFAULT_JITTER, chol_factor, chol_solve


@dataclass(frozen=True, eq=False)
class LocalSummary:
    """One worker's projection of its data onto the support set."""

    owner: int
    y_dot_S: np.ndarray
    Sigma_dot_SS: np.ndarray


@dataclass(frozen=True, eq=False)
class PicLocalTerms:
    """Per-worker terms retained locally for block-aware prediction."""

    owner: int
    y_dot_U: np.ndarray
    Sigma_dot_US: np.ndarray
    Sigma_dot_UU: np.ndarray


@dataclass(frozen=True, eq=False)
class GlobalSummary:
    """Fused summaries: y_ddot_S = sum_m y_dot_S^m, Sigma_ddot_SS = Sigma_SS + sum_m Sigma_dot_SS^m."""

    y_ddot_S: np.ndarray
    Sigma_ddot_SS: np.ndarray


@dataclass(frozen=True, eq=False)
class ICFLocalSummary:
    """Factor-column projections: y_dot = Fm r_m, Sigma_dot = Fm Sigma_Dm,U, Phi_m = Fm Fm^T."""

    owner: int
    y_dot: np.ndarray
    Sigma_dot: np.ndarray
    Phi_m: np.ndarray


@dataclass(frozen=True, eq=False)
class ICFGlobalSummary:
    """Master-side fusion: Phi = I + noise^-1 sum Phi_m; y_ddot, Sigma_ddot are Phi^-1 sums."""

    y_ddot: np.ndarray
    Sigma_ddot: np.ndarray
    Phi: np.ndarray


def local_projection(train_view: Dataset, mu_train: np.ndarray, support: Dataset,
                     h: Hyperparameters, jitter: float = DEFAULT_JITTER,
                     owner: int = 0, tests_view: Dataset | None = None):
    """Compute a worker's local summary, plus its test-block terms if given.

    One factorization of Sigma_{Dm Dm|S} serves both projections.
    Returns (LocalSummary, PicLocalTerms | None).
    """
    if train_view.outputs is None:
        raise ValueError("local data carries no realized outputs")
    cov_support_train = cov_matrix(support, train_view, h)
    fac_support = chol_factor(cov_matrix(support, support, h), "Sigma_SS", jitter)
    deflated = cov_matrix(train_view, train_view, h) - cov_support_train.T @ chol_solve(
        fac_support, cov_support_train
    )
    fac_block = chol_factor(deflated, f"Sigma_D{owner}D{owner}|S", jitter)
    resid = train_view.outputs - mu_train
    y_dot_S = cov_support_train @ chol_solve(fac_block, resid)
    Sigma_dot_SS = cov_support_train @ chol_solve(fac_block, cov_support_train.T)
    summary = LocalSummary(owner=owner, y_dot_S=y_dot_S, Sigma_dot_SS=Sigma_dot_SS)
    if tests_view is None:
        return summary, None
    cov_tests_train = cov_matrix(tests_view, train_view, h)
    solved = chol_solve(fac_block, cov_tests_train.T)
    terms = PicLocalTerms(
        owner=owner,
        y_dot_U=cov_tests_train @ chol_solve(fac_block, resid),
        Sigma_dot_US=(cov_support_train @ solved).T,
        Sigma_dot_UU=cov_tests_train @ solved,
    )
    return summary, terms


def compute_local_summary(assignment, support, h: Hyperparameters,
                          mu_train: np.ndarray | None = None,
                          jitter: float = DEFAULT_JITTER) -> LocalSummary:
    """Local summary of one worker assignment.

    ``mu_train`` is the prior-mean vector for the worker's block; when
    omitted it is resolved from the block alone, so callers that want a
    globally consistent default constant should pass the slice themselves.
    """
    from ..kernel import resolve_prior_means

    train_view = assignment.train
    if mu_train is None:
        mu_train = resolve_prior_means(train_view)
    support_ds = support.dataset if hasattr(support, "dataset") else support
    summary, _ = local_projection(
        train_view, mu_train, support_ds, h, jitter=jitter, owner=assignment.worker_id
    )
    return summary


def aggregate_global_summary(local_summaries, support, h: Hyperparameters,
                             jitter: float = DEFAULT_JITTER) -> GlobalSummary:
    """Fuse local summaries in ascending worker order."""
    if not local_summaries:
        raise ValueError("no local summaries to aggregate")
    support_ds = support.dataset if hasattr(support, "dataset") else support
    size = len(support_ds)
    ordered = sorted(local_summaries, key=lambda s: s.owner)
    y_ddot = np.zeros(size)
    sigma_ddot = cov_matrix(support_ds, support_ds, h)
    for summary in ordered:
        if summary.y_dot_S.shape != (size,) or summary.Sigma_dot_SS.shape != (size, size):
            raise DimensionMismatch(
                f"summary from worker {summary.owner} does not match support size {size}"
            )
        y_ddot = y_ddot + summary.y_dot_S
        sigma_ddot = sigma_ddot + summary.Sigma_dot_SS
    return GlobalSummary(y_ddot_S=y_ddot, Sigma_ddot_SS=sigma_ddot)


def assimilate_new_data(existing: GlobalSummary, new_locals) -> GlobalSummary:
    """Fold summaries of newly arrived (disjoint) data into a global summary.

    Additivity of the fusion means old summaries are reused untouched; the
    result equals aggregating over the union from scratch.
    """
    y_ddot = existing.y_ddot_S
    sigma_ddot = existing.Sigma_ddot_SS
    for summary in sorted(new_locals, key=lambda s: s.owner):
        if summary.y_dot_S.shape != y_ddot.shape or summary.Sigma_dot_SS.shape != sigma_ddot.shape:
            raise DimensionMismatch(
                f"summary from worker {summary.owner} does not match the existing global summary"
            )
        y_ddot = y_ddot + summary.y_dot_S
        sigma_ddot = sigma_ddot + summary.Sigma_dot_SS
    return GlobalSummary(y_ddot_S=y_ddot, Sigma_ddot_SS=sigma_ddot)


# ---------------------------------------------------------------------------
# Per-block predictors. All take precomputed Cholesky factors of Sigma_SS and
# of the global Sigma_ddot_SS, so workers share one factorization each.
# ---------------------------------------------------------------------------


def summary_block_prediction(mu_tests, cov_support_tests, fac_support, fac_global,
                             y_ddot, prior_var, tests_view=None, h=None,
                             want_full_cov=False):
    """Support-set-only prediction for one test block (summary information only)."""
    mean = mu_tests + cov_support_tests.T @ chol_solve(fac_global, y_ddot)
    through_prior = chol_solve(fac_support, cov_support_tests)
    through_global = chol_solve(fac_global, cov_support_tests)
    if want_full_cov:
        cov = cov_matrix(tests_view, tests_view, h) - cov_support_tests.T @ (
            through_prior - through_global
        )
        return mean, np.diag(cov).copy(), cov
    variance = (
        prior_var
        - np.einsum("su,su->u", cov_support_tests, through_prior)
        + np.einsum("su,su->u", cov_support_tests, through_global)
    )
    return mean, variance, None


def block_correction_matrix(cov_support_tests, fac_support, local: LocalSummary,
                            terms: PicLocalTerms) -> np.ndarray:
    """Phi_Um,S = Sigma_Um,S + Sigma_Um,S Sigma_SS^-1 Sigma_dot_SS - Sigma_dot_Um,S."""
    return (
        cov_support_tests.T
        + chol_solve(fac_support, cov_support_tests).T @ local.Sigma_dot_SS
        - terms.Sigma_dot_US
    )


def blockaware_block_prediction(mu_tests, cov_support_tests, fac_support, fac_global,
                                y_ddot, local: LocalSummary, terms: PicLocalTerms,
                                prior_var, tests_view=None, h=None,
                                want_full_cov=False):
    """Block-aware prediction combining the global summary with local data."""
    phi_US = block_correction_matrix(cov_support_tests, fac_support, local, terms)
    mean = (
        mu_tests
        + phi_US @ chol_solve(fac_global, y_ddot)
        - cov_support_tests.T @ chol_solve(fac_support, local.y_dot_S)
        + terms.y_dot_U
    )
    through_prior = chol_solve(fac_support, cov_support_tests)
    through_dot = chol_solve(fac_support, terms.Sigma_dot_US.T)
    through_global = chol_solve(fac_global, phi_US.T)
    if want_full_cov:
        cov = (
            cov_matrix(tests_view, tests_view, h)
            - (phi_US @ through_prior
               - cov_support_tests.T @ through_dot
               - phi_US @ through_global)
            - terms.Sigma_dot_UU
        )
        return mean, np.diag(cov).copy(), cov, phi_US
    variance = (
        prior_var
        - np.einsum("us,su->u", phi_US, through_prior)
        + np.einsum("su,su->u", cov_support_tests, through_dot)
        + np.einsum("us,su->u", phi_US, through_global)
        - np.diag(terms.Sigma_dot_UU)
    )
    return mean, variance, None, phi_US


def summary_cross_block(cov_tests_i_j, cov_support_tests_i, cov_support_tests_j,
                        fac_support, fac_global) -> np.ndarray:
    """Cross-block posterior covariance for the summary-only predictor."""
    return cov_tests_i_j - cov_support_tests_i.T @ (
        chol_solve(fac_support, cov_support_tests_j)
        - chol_solve(fac_global, cov_support_tests_j)
    )


def blockaware_cross_block(cov_tests_i_j, cov_support_tests_i, cov_support_tests_j,
                           phi_i_US, phi_j_US, fac_support, fac_global) -> np.ndarray:
    """Cross-block posterior covariance for the block-aware predictor."""
    deflated = cov_tests_i_j - cov_support_tests_i.T @ chol_solve(
        fac_support, cov_support_tests_j
    )
    return deflated + phi_i_US @ chol_solve(fac_global, phi_j_US.T)


# ---------------------------------------------------------------------------
# Incomplete-Cholesky summaries.
# ---------------------------------------------------------------------------


def icf_local_summary(owner: int, factor_cols: np.ndarray, train_view: Dataset,
                      mu_train: np.ndarray, tests: Dataset,
                      h: Hyperparameters) -> ICFLocalSummary:
    if train_view.outputs is None:
        raise ValueError("local data carries no realized outputs")
    cov_train_tests = cov_matrix(train_view, tests, h)
    return ICFLocalSummary(
        owner=owner,
        y_dot=factor_cols @ (train_view.outputs - mu_train),
        Sigma_dot=factor_cols @ cov_train_tests,
        Phi_m=factor_cols @ factor_cols.T,
    )


def icf_global_summary(local_summaries, noise_variance: float,
                       jitter: float = DEFAULT_JITTER) -> ICFGlobalSummary:
    """Fuse factor-space summaries; Phi = I + noise^-1 sum Phi_m (ascending order)."""
    if not local_summaries:
        raise ValueError("no local summaries to aggregate")
    ordered = sorted(local_summaries, key=lambda s: s.owner)
    rank = ordered[0].y_dot.shape[0]
    phi_sum = np.zeros((rank, rank))
    y_sum = np.zeros(rank)
    sigma_sum = np.zeros_like(ordered[0].Sigma_dot)
    for summary in ordered:
        if summary.y_dot.shape != y_sum.shape or summary.Sigma_dot.shape != sigma_sum.shape \
                or summary.Phi_m.shape != phi_sum.shape:
            raise DimensionMismatch(
                f"summary from worker {summary.owner} does not match rank {rank}"
            )
        phi_sum = phi_sum + summary.Phi_m
        y_sum = y_sum + summary.y_dot
        sigma_sum = sigma_sum + summary.Sigma_dot
    phi = np.eye(rank) + phi_sum / noise_variance
    fac_phi = chol_factor(phi, "Phi", jitter)
    return ICFGlobalSummary(
        y_ddot=chol_solve(fac_phi, y_sum),
        Sigma_ddot=chol_solve(fac_phi, sigma_sum),
        Phi=phi,
    )


def icf_predictive_component(local: ICFLocalSummary, global_summary: ICFGlobalSummary,
                             train_view: Dataset, mu_train: np.ndarray, tests: Dataset,
                             h: Hyperparameters, want_full_cov: bool = False):
    """One worker's additive contribution to the master's prediction."""
    inv_noise = 1.0 / h.noise_variance
    cov_train_tests = cov_matrix(train_view, tests, h)
    resid = train_view.outputs - mu_train
    mean_part = inv_noise * (cov_train_tests.T @ resid) - inv_noise**2 * (
        local.Sigma_dot.T @ global_summary.y_ddot
    )
    if want_full_cov:
        cov_part = inv_noise * (cov_train_tests.T @ cov_train_tests) - inv_noise**2 * (
            local.Sigma_dot.T @ global_summary.Sigma_ddot
        )
        return mean_part, cov_part
    var_part = inv_noise * np.einsum(
        "du,du->u", cov_train_tests, cov_train_tests
    ) - inv_noise**2 * np.einsum("ru,ru->u", local.Sigma_dot, global_summary.Sigma_ddot)
    return mean_part, var_part
