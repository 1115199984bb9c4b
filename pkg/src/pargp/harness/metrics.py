"""Predictive-performance metrics and the per-experiment report record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonPositiveVariance
from ..fullgp import PredictiveDistribution


def rmse(pred: PredictiveDistribution, truth) -> float:
    """Root mean square error of the predictive mean against realized outputs."""
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if truth.shape != pred.mean.shape:
        raise ValueError(f"length mismatch: {truth.shape} truth vs {pred.mean.shape} mean")
    return float(np.sqrt(np.mean((truth - pred.mean) ** 2)))


def mnlp(pred: PredictiveDistribution, truth) -> float:
    """Mean negative log probability of the realized outputs.

    0.5 * mean((y - mu)^2 / var + log(2 pi var)). Refuses to evaluate when
    any predictive variance is nonpositive (reduced-rank factors can produce
    them); the raised error carries the offender count so callers can report
    it instead of hiding the problem.
    """
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if truth.shape != pred.mean.shape:
        raise ValueError(f"length mismatch: {truth.shape} truth vs {pred.mean.shape} mean")
    bad = pred.variance <= 0.0
    if bad.any():
        raise NonPositiveVariance(int(bad.sum()), float(pred.variance.min()))
    return float(
        0.5 * np.mean(
            (truth - pred.mean) ** 2 / pred.variance
            + np.log(2.0 * math.pi * pred.variance)
        )
    )


@dataclass
class MetricsReport:
    """Aggregated results of one experiment configuration."""

    rmse: float
    mnlp: float | None
    wall_seconds: dict = field(default_factory=dict)
    speedup: float | None = None
    negative_variance_count: int = 0
    rmse_vs_reference: float | None = None
