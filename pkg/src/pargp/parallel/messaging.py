"""Size-accounted in-process messaging for the worker simulation.

Values always move directly (everything lives in one process); what this
module provides is the deterministic accounting. Collectives are charged as
binomial-tree edges — M-1 point-to-point records per broadcast or reduction,
each carrying one payload-sized message, with tree depth ceil(log2 M) — so
logged totals reproduce the communication pattern of a real cluster run.
Self-delivery (sender == receiver) is free and unlogged, which makes a
single-worker run cost zero bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FLOAT_BYTES = 8


@dataclass(frozen=True)
class MessageRecord:
    phase: str
    tag: str
    sender: int
    receiver: int
    scalar_count: int
    payload_bytes: int


@dataclass
class PhaseTotals:
    messages: int
    scalars: int
    bytes: int
    by_tag: dict

    def tag_scalars(self, tag: str) -> int:
        return self.by_tag.get(tag, 0)


class MessageLog:
    """Append-only record of every accounted message."""

    def __init__(self):
        self.records: list[MessageRecord] = []

    def append(self, record: MessageRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other) -> bool:
        return isinstance(other, MessageLog) and self.records == other.records

    def phases(self) -> list[str]:
        seen: list[str] = []
        for rec in self.records:
            if rec.phase not in seen:
                seen.append(rec.phase)
        return seen

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["phase", "sender", "receiver", "tag", "scalar_count", "bytes"])
            for rec in self.records:
                writer.writerow(
                    [rec.phase, rec.sender, rec.receiver, rec.tag,
                     rec.scalar_count, rec.payload_bytes]
                )


def message_totals(log: MessageLog, phase: str | None = None) -> PhaseTotals:
    """Aggregate counters for one phase (or all phases when phase is None)."""
    if phase is not None and phase not in log.phases():
        raise ValueError(f"unknown phase {phase!r}; log has {log.phases()}")
    messages = scalars = nbytes = 0
    by_tag: dict[str, int] = {}
    for rec in log.records:
        if phase is not None and rec.phase != phase:
            continue
        messages += 1
        scalars += rec.scalar_count
        nbytes += rec.payload_bytes
        by_tag[rec.tag] = by_tag.get(rec.tag, 0) + rec.scalar_count
    return PhaseTotals(messages=messages, scalars=scalars, bytes=nbytes, by_tag=by_tag)


def tree_edges(n_workers: int, root_rank: int = 0) -> list[tuple[int, int]]:
    """Binomial broadcast tree edges over 0-indexed ranks, relabeled to the root."""
    edges: list[tuple[int, int]] = []
    span = 1
    while span < n_workers:
        for src in range(span):
            dst = src + span
            if dst < n_workers:
                edges.append((src, dst))
        span <<= 1
    return [((s + root_rank) % n_workers, (d + root_rank) % n_workers) for s, d in edges]


class Transport:
    """Accounting front-end; workers are 1..M and worker 1 doubles as master."""

    def __init__(self, n_workers: int, log: MessageLog | None = None):
        if n_workers < 1:
            raise ValueError("need at least one worker")
        self.n_workers = n_workers
        self.log = log if log is not None else MessageLog()

    def _record(self, phase, tag, sender, receiver, scalars, nbytes=None):
        if sender == receiver:
            return
        if nbytes is None:
            nbytes = scalars * FLOAT_BYTES
        self.log.append(
            MessageRecord(phase=phase, tag=tag, sender=sender, receiver=receiver,
                          scalar_count=int(scalars), payload_bytes=int(nbytes))
        )

    def point_to_point(self, phase: str, tag: str, sender: int, receiver: int,
                       scalars: int, nbytes: int | None = None) -> None:
        self._record(phase, tag, sender, receiver, scalars, nbytes)

    def broadcast(self, phase: str, tag: str, scalars: int, root: int = 1) -> None:
        """Charge one logical broadcast from ``root`` to every worker."""
        for src, dst in tree_edges(self.n_workers, root_rank=root - 1):
            self._record(phase, tag, src + 1, dst + 1, scalars)

    def reduce(self, phase: str, tag: str, scalars: int, root: int = 1) -> None:
        """Charge one logical reduction of per-worker payloads onto ``root``."""
        for src, dst in reversed(tree_edges(self.n_workers, root_rank=root - 1)):
            self._record(phase, tag, dst + 1, src + 1, scalars)

    @staticmethod
    def payload_scalars(*arrays) -> int:
        return int(sum(np.asarray(a).size for a in arrays))
