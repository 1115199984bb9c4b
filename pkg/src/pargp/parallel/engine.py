"""Deterministic master/worker engine for the three distributed predictors.

M logical workers (worker 1 doubles as master) exchange data only through a
size-accounted transport. Workers may execute concurrently, but every
reduction consumes payloads in ascending worker order and all accounting is
done by the master loop, so outputs and message logs are bitwise identical
across runs and independent of completion order.

Communication model: local summaries ride a reduction tree to the master,
global summaries ride a broadcast tree back, and the distributed
factorization broadcasts one pivot per round. Per-block predictions stay
distributed (collecting them is free simulation plumbing, matching the
complexity model in which prediction traffic does not appear), except for
the factor-based algorithm whose predictive components are genuinely summed
at the master and are charged accordingly.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..fullgp import PredictiveDistribution
from ..icf import ICFFactor, icf_row_update, pivot_argmax
from ..kernel import Dataset, Hyperparameters, cov_matrix, kernel_matrix, prior_variances, \
    resolve_prior_means
from ..linalg import DEFAULT_JITTER, chol_factor, chol_solve
from .messaging import MessageLog, Transport
from .partition import WorkerAssignment, validate_assignments
from .summaries import (
    GlobalSummary,
    ICFGlobalSummary,
    aggregate_global_summary,
    block_correction_matrix,
    blockaware_block_prediction,
    blockaware_cross_block,
    icf_global_summary,
    icf_local_summary,
    icf_predictive_component,
    local_projection,
    summary_block_prediction,
    summary_cross_block,
)

_PIVOT_TOL = -1e-8


@dataclass
class _RunArtifacts:
    kind: str
    support_ds: Dataset = None
    fac_support: tuple = None
    fac_global: tuple = None
    cov_support_tests: list = None
    phi_blocks: list = None
    test_views: list = None


class Engine:
    """One engine instance drives one run at a time over a fixed assignment."""

    def __init__(self, train: Dataset, test: Dataset, assignments, h: Hyperparameters,
                 log: MessageLog | None = None, jitter: float = DEFAULT_JITTER,
                 threads: bool = False):
        validate_assignments(assignments, train, test)
        self.train = train
        self.test = test
        self.assignments = sorted(assignments, key=lambda a: a.worker_id)
        self.h = h
        self.jitter = jitter
        self.threads = threads
        self.log = log if log is not None else MessageLog()
        self.transport = Transport(len(self.assignments), self.log)
        self.mu_train, self.mu_test = resolve_prior_means(train, test)
        self.phase_seconds: dict[str, float] = {}
        self._artifacts: _RunArtifacts | None = None

    @property
    def n_workers(self) -> int:
        return len(self.assignments)

    # ------------------------------------------------------------------
    # plumbing
    # ------------------------------------------------------------------

    def _map_workers(self, fn):
        if self.threads and self.n_workers > 1:
            with ThreadPoolExecutor(max_workers=self.n_workers) as pool:
                return list(pool.map(fn, self.assignments))
        return [fn(a) for a in self.assignments]

    def _timed(self, phase: str, fn):
        start = time.perf_counter()
        out = fn()
        self.phase_seconds[phase] = self.phase_seconds.get(phase, 0.0) + (
            time.perf_counter() - start
        )
        return out

    def _scatter(self, per_worker_means, per_worker_vars):
        mean = np.empty(len(self.test))
        variance = np.empty(len(self.test))
        for a, m, v in zip(self.assignments, per_worker_means, per_worker_vars):
            mean[a.test_index] = m
            variance[a.test_index] = v
        return mean, variance

    # ------------------------------------------------------------------
    # support-set algorithms
    # ------------------------------------------------------------------

    def run_ppitc(self, support, want_full_cov: bool = False,
                  global_summary: GlobalSummary | None = None) -> PredictiveDistribution:
        return self._run_support_algorithm("summary", support, want_full_cov, global_summary)

    def run_ppic(self, support, want_full_cov: bool = False,
                 global_summary: GlobalSummary | None = None) -> PredictiveDistribution:
        return self._run_support_algorithm("blockaware", support, want_full_cov, global_summary)

    def _run_support_algorithm(self, kind, support, want_full_cov, global_summary):
        support_ds = support.dataset if hasattr(support, "dataset") else support
        if len(support_ds) == 0:
            raise ValueError("support set is empty")
        h, jitter = self.h, self.jitter
        size = len(support_ds)
        fac_support = chol_factor(cov_matrix(support_ds, support_ds, h), "Sigma_SS", jitter)
        with_terms = kind == "blockaware"

        def stage_local(a: WorkerAssignment):
            return local_projection(
                a.train, self.mu_train[a.train_index], support_ds, h,
                jitter=jitter, owner=a.worker_id,
                tests_view=a.tests if with_terms else None,
            )

        stage_out = self._timed("local_summary", lambda: self._map_workers(stage_local))
        locals_ = [s for s, _ in stage_out]
        terms = [t for _, t in stage_out]

        def fuse():
            if global_summary is not None:
                return global_summary
            self.transport.reduce("local_summary", "sigma_dot", scalars=size * size)
            self.transport.reduce("local_summary", "y_dot", scalars=size)
            return aggregate_global_summary(locals_, support_ds, h, jitter=jitter)

        fused = self._timed("global_summary", fuse)
        self.transport.broadcast("global_summary", "sigma_ddot", scalars=size * size)
        self.transport.broadcast("global_summary", "y_ddot", scalars=size)
        fac_global = chol_factor(fused.Sigma_ddot_SS, "Sigma_ddot_SS", jitter)

        phi_blocks: list = [None] * self.n_workers

        def stage_predict(a: WorkerAssignment):
            cov_support_tests = cov_matrix(support_ds, a.tests, h)
            prior = prior_variances(a.tests, h)
            mu_u = self.mu_test[a.test_index]
            if kind == "summary":
                mean, var, cov = summary_block_prediction(
                    mu_u, cov_support_tests, fac_support, fac_global,
                    fused.y_ddot_S, prior,
                    tests_view=a.tests, h=h, want_full_cov=want_full_cov,
                )
                phi = None
            else:
                i = a.worker_id - 1
                mean, var, cov, phi = blockaware_block_prediction(
                    mu_u, cov_support_tests, fac_support, fac_global,
                    fused.y_ddot_S, locals_[i], terms[i], prior,
                    tests_view=a.tests, h=h, want_full_cov=want_full_cov,
                )
            return mean, var, cov, cov_support_tests, phi

        results = self._timed("prediction", lambda: self._map_workers(stage_predict))
        mean, variance = self._scatter([r[0] for r in results], [r[1] for r in results])

        self._artifacts = _RunArtifacts(
            kind=kind,
            support_ds=support_ds,
            fac_support=fac_support,
            fac_global=fac_global,
            cov_support_tests=[r[3] for r in results],
            phi_blocks=[r[4] for r in results],
            test_views=[a.tests for a in self.assignments],
        )

        cov = None
        if want_full_cov:
            cov = self._timed(
                "cross_block", lambda: self._assemble_full_cov([r[2] for r in results])
            )
            variance = np.diag(cov).copy()
        return PredictiveDistribution(mean, variance, self.test.ids.copy(), covariance=cov)

    def cross_block_covariance(self, i: int, j: int) -> np.ndarray:
        """Posterior covariance between worker i's and worker j's test blocks.

        Worker i is charged with receiving worker j's test inputs (plus j's
        correction block for the block-aware variant).
        """
        art = self._artifacts
        if art is None or art.kind not in ("summary", "blockaware"):
            raise RuntimeError("run a support-set algorithm before requesting cross blocks")
        if i == j:
            raise ValueError("cross-block covariance is defined for distinct workers")
        for w in (i, j):
            if not (1 <= w <= self.n_workers):
                raise ValueError(f"unknown worker id {w}")
        view_i, view_j = art.test_views[i - 1], art.test_views[j - 1]
        if len(view_j) and len(view_i):
            self.transport.point_to_point(
                "cross_block", "test_inputs", j, i,
                scalars=len(view_j) * view_j.dim,
            )
        if len(view_i) == 0 or len(view_j) == 0:
            return np.zeros((len(view_i), len(view_j)))
        cov_ij = cov_matrix(view_i, view_j, self.h)
        if art.kind == "summary":
            return summary_cross_block(
                cov_ij, art.cov_support_tests[i - 1], art.cov_support_tests[j - 1],
                art.fac_support, art.fac_global,
            )
        self.transport.point_to_point(
            "cross_block", "phi_block", j, i,
            scalars=len(art.support_ds) * len(view_j),
        )
        return blockaware_cross_block(
            cov_ij, art.cov_support_tests[i - 1], art.cov_support_tests[j - 1],
            art.phi_blocks[i - 1], art.phi_blocks[j - 1],
            art.fac_support, art.fac_global,
        )

    def _assemble_full_cov(self, diag_blocks) -> np.ndarray:
        n = len(self.test)
        cov = np.empty((n, n))
        for a, block in zip(self.assignments, diag_blocks):
            cov[np.ix_(a.test_index, a.test_index)] = block
        for i in range(1, self.n_workers + 1):
            for j in range(i + 1, self.n_workers + 1):
                block = self.cross_block_covariance(i, j)
                bi = self.assignments[i - 1].test_index
                bj = self.assignments[j - 1].test_index
                cov[np.ix_(bi, bj)] = block
                cov[np.ix_(bj, bi)] = block.T
        return cov

    # ------------------------------------------------------------------
    # factor-based algorithm
    # ------------------------------------------------------------------

    def run_picf(self, rank: int, partition_u: bool = False,
                 want_full_cov: bool = False) -> PredictiveDistribution:
        factor = self._timed("factorize", lambda: self._distributed_factorize(rank))
        pred = self._picf_predict(factor, partition_u, want_full_cov)
        self._artifacts = _RunArtifacts(kind="factor")
        self.last_factor = factor
        return pred

    def _distributed_factorize(self, rank: int) -> ICFFactor:
        """Row-parallel pivoted factorization over per-worker column blocks.

        Pivots are chosen from globally reduced residual diagonals (one
        reduction and one broadcast per pivot), and row updates run the same
        einsum arithmetic as the centralized factorization, so the
        distributed factor is bitwise-equal to the centralized one.
        """
        h = self.h
        n = len(self.train)
        if not (1 <= rank <= n):
            raise ValueError(f"rank must be in [1, {n}], got {rank}")
        d = self.train.dim
        cols = [a.train_index for a in self.assignments]
        blocks = [np.zeros((rank, idx.size)) for idx in cols]
        residuals = [np.full(idx.size, h.signal_variance) for idx in cols]
        eligibles = [np.ones(idx.size, dtype=bool) for idx in cols]
        feats = [self.train.X[idx] for idx in cols]
        pivot_positions: list[int] = []

        for k in range(rank):
            # Each worker nominates its best local pivot; ties resolve to the
            # smallest global index, matching a full-array argmax.
            best_value, best_global, best_worker, best_col = -np.inf, -1, -1, -1
            for w in range(self.n_workers):
                if not eligibles[w].any():
                    continue
                c = pivot_argmax(residuals[w], eligibles[w])
                v = float(residuals[w][c])
                g = int(cols[w][c])
                if v > best_value or (v == best_value and g < best_global):
                    best_value, best_global, best_worker, best_col = v, g, w, c
            self.transport.reduce("factorize", "pivot_select", scalars=2)
            if best_value < _PIVOT_TOL:
                from ..errors import ConditioningError

                raise ConditioningError(
                    "K_DD (noise-free)", f"pivot {best_value:.3e} at step {k}"
                )
            if best_value <= 0.0:
                break
            root = float(np.sqrt(best_value))
            pivot_x = feats[best_worker][best_col]
            prefix = blocks[best_worker][:k, best_col]
            self.transport.broadcast(
                "factorize", "pivot_data", scalars=d + k + 2, root=best_worker + 1
            )

            def update(w):
                krow = kernel_matrix(pivot_x, feats[w], h)[0]
                blocks[w][k] = icf_row_update(krow, blocks[w][:k], prefix, root)
                residuals[w] = residuals[w] - blocks[w][k] * blocks[w][k]

            if self.threads and self.n_workers > 1:
                with ThreadPoolExecutor(max_workers=self.n_workers) as pool:
                    list(pool.map(update, range(self.n_workers)))
            else:
                for w in range(self.n_workers):
                    update(w)
            residuals[best_worker][best_col] = 0.0
            eligibles[best_worker][best_col] = False
            pivot_positions.append(best_global)

        factor = np.zeros((rank, n))
        residual = np.empty(n)
        for w in range(self.n_workers):
            factor[:, cols[w]] = blocks[w]
            residual[cols[w]] = residuals[w]
        self._factor_blocks = blocks
        return ICFFactor(
            factor=factor,
            pivot_ids=self.train.ids[np.asarray(pivot_positions, dtype=int)],
            residual_diag=residual,
            point_ids=self.train.ids.copy(),
        )

    def _picf_predict(self, factor: ICFFactor, partition_u: bool,
                      want_full_cov: bool) -> PredictiveDistribution:
        h, jitter = self.h, self.jitter
        rank = factor.rank
        n_test = len(self.test)

        def stage_summary(a: WorkerAssignment):
            w = a.worker_id - 1
            return icf_local_summary(
                a.worker_id, self._factor_blocks[w], a.train,
                self.mu_train[a.train_index], self.test, h,
            )

        locals_ = self._timed("local_summary", lambda: self._map_workers(stage_summary))

        def fuse():
            if partition_u:
                # Column blocks of Sigma_dot travel straight to their owners
                # instead of riding the reduction to the master.
                for a_src in self.assignments:
                    for a_dst in self.assignments:
                        if a_src.worker_id == a_dst.worker_id:
                            continue
                        width = a_dst.test_index.size
                        if width:
                            self.transport.point_to_point(
                                "local_summary", "sigma_dot",
                                a_src.worker_id, a_dst.worker_id,
                                scalars=rank * width,
                            )
            else:
                self.transport.reduce("local_summary", "sigma_dot", scalars=rank * n_test)
            self.transport.reduce("local_summary", "y_dot", scalars=rank)
            self.transport.reduce("local_summary", "phi", scalars=rank * rank)
            fused = icf_global_summary(locals_, h.noise_variance, jitter=jitter)
            if partition_u:
                # Workers rebuild Sigma_ddot from per-block solves; the master
                # ships Phi, each owner broadcasts its finished column block.
                self.transport.broadcast("global_summary", "phi", scalars=rank * rank)
                fac_phi = chol_factor(fused.Phi, "Phi", jitter)
                sigma_sum = np.zeros((rank, n_test))
                for s in sorted(locals_, key=lambda s: s.owner):
                    sigma_sum = sigma_sum + s.Sigma_dot
                sigma_ddot = np.empty((rank, n_test))
                for a in self.assignments:
                    width = a.test_index.size
                    if width:
                        sigma_ddot[:, a.test_index] = chol_solve(
                            fac_phi, sigma_sum[:, a.test_index]
                        )
                        self.transport.broadcast(
                            "global_summary", "sigma_ddot",
                            scalars=rank * width, root=a.worker_id,
                        )
                fused = ICFGlobalSummary(
                    y_ddot=fused.y_ddot, Sigma_ddot=sigma_ddot, Phi=fused.Phi
                )
                self.transport.broadcast("global_summary", "y_ddot", scalars=rank)
            else:
                self.transport.broadcast("global_summary", "sigma_ddot", scalars=rank * n_test)
                self.transport.broadcast("global_summary", "y_ddot", scalars=rank)
            return fused

        fused = self._timed("global_summary", fuse)

        def stage_component(a: WorkerAssignment):
            w = a.worker_id - 1
            return icf_predictive_component(
                locals_[w], fused, a.train, self.mu_train[a.train_index],
                self.test, h, want_full_cov=want_full_cov,
            )

        components = self._timed("prediction", lambda: self._map_workers(stage_component))
        payload = n_test * n_test if want_full_cov else n_test
        self.transport.reduce("prediction", "mu", scalars=n_test)
        self.transport.reduce("prediction", "cov" if want_full_cov else "var", scalars=payload)

        mean = self.mu_test.copy()
        for part, _ in components:
            mean = mean + part
        if want_full_cov:
            cov = cov_matrix(self.test, self.test, h)
            for _, part in components:
                cov = cov - part
            variance = np.diag(cov).copy()
        else:
            cov = None
            variance = prior_variances(self.test, h)
            for _, part in components:
                variance = variance - part
        worst = float(variance.min())
        flagged = worst < 0.0
        return PredictiveDistribution(
            mean, variance, self.test.ids.copy(), covariance=cov,
            psd_valid=not flagged,
            most_negative_variance=worst if flagged else None,
        )


# ----------------------------------------------------------------------
# One-shot conveniences mirroring the engine methods.
# ----------------------------------------------------------------------


def ppitc_predict(train, test, support, assignments, h, want_full_cov=False,
                  global_summary=None, log=None, jitter=DEFAULT_JITTER,
                  threads=False) -> PredictiveDistribution:
    eng = Engine(train, test, assignments, h, log=log, jitter=jitter, threads=threads)
    return eng.run_ppitc(support, want_full_cov=want_full_cov, global_summary=global_summary)


def ppic_predict(train, test, support, assignments, h, want_full_cov=False,
                 global_summary=None, log=None, jitter=DEFAULT_JITTER,
                 threads=False) -> PredictiveDistribution:
    eng = Engine(train, test, assignments, h, log=log, jitter=jitter, threads=threads)
    return eng.run_ppic(support, want_full_cov=want_full_cov, global_summary=global_summary)


def picf_predict(train, test, assignments, h, rank, partition_u=False,
                 want_full_cov=False, log=None, jitter=DEFAULT_JITTER,
                 threads=False) -> PredictiveDistribution:
    eng = Engine(train, test, assignments, h, log=log, jitter=jitter, threads=threads)
    return eng.run_picf(rank, partition_u=partition_u, want_full_cov=want_full_cov)
