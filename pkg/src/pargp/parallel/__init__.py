"""Master/worker engine, partitioning, summaries, and message accounting."""

from .messaging import MessageLog, MessageRecord, PhaseTotals, Transport, message_totals
from .partition import WorkerAssignment, partition_clustered, partition_random, \
    validate_assignments
from .summaries import (
    GlobalSummary,
    ICFGlobalSummary,
    ICFLocalSummary,
    LocalSummary,
    PicLocalTerms,
    aggregate_global_summary,
    assimilate_new_data,
    compute_local_summary,
    local_projection,
)
from .engine import Engine, picf_predict, ppic_predict, ppitc_predict

__all__ = [
    "Engine",
    "GlobalSummary",
    "ICFGlobalSummary",
    "ICFLocalSummary",
    "LocalSummary",
    "MessageLog",
    "MessageRecord",
    "PhaseTotals",
    "PicLocalTerms",
    "Transport",
    "WorkerAssignment",
    "aggregate_global_summary",
    "assimilate_new_data",
    "compute_local_summary",
    "local_projection",
    "message_totals",
    "partition_clustered",
    "partition_random",
    "picf_predict",
    "ppic_predict",
    "ppitc_predict",
    "validate_assignments",
]
