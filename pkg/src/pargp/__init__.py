"""Parallel Gaussian-process regression toolkit.

Exact GP regression plus two families of distributed low-rank
approximations — support-set summaries and incomplete Cholesky — run on a
deterministic master/worker engine with size-accounted messaging, alongside
their centralized counterparts for equivalence checking and speedup
measurement.
"""

from .centralized import BlockStructure, pic_predict, pitc_predict
from .errors import ConditioningError, DimensionMismatch, GPError, NonPositiveVariance
from .fullgp import PredictiveDistribution, fgp_predict
from .icf import ICFFactor, icf_factorize, icf_predict
from .kernel import Dataset, Hyperparameters, InputPoint, cov_matrix, covariance, \
    kernel_matrix, prior_variances, resolve_prior_means
from .linalg import DEFAULT_JITTER
from .parallel import (
    Engine,
    GlobalSummary,
    LocalSummary,
    MessageLog,
    WorkerAssignment,
    aggregate_global_summary,
    assimilate_new_data,
    compute_local_summary,
    message_totals,
    partition_clustered,
    partition_random,
    picf_predict,
    ppic_predict,
    ppitc_predict,
)
from .support import SupportSet, select_support
from . import harness

__version__ = "0.1.0"
