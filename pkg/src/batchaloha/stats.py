"""Point estimates, confidence intervals, and distribution comparisons
over raw simulation records.

Replications are exactly independent, so the default estimator is the
mean of replication means with a Student-t 95% interval.  A single
replication falls back to batch means (20 batches over the event
sequence), which tolerates the autocorrelation of within-run samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .analytic import QueueLaws
from .sim import RawMetrics

__all__ = [
    "DistributionComparison",
    "EmptyHistogram",
    "Estimate",
    "InsufficientSamples",
    "compare_qk",
    "estimate_throughput",
    "estimate_waiting",
]

MIN_SAMPLES = 100
BATCH_COUNT = 20


class InsufficientSamples(Exception):
    """Too few post-warmup samples to form an estimate."""


class EmptyHistogram(Exception):
    """No samples were recorded for the requested histogram."""


@dataclass(frozen=True)
class Estimate:
    mean: float
    ci_half_width: float  # 95% Student-t
    n_samples: int
    method: str  # "batch_means" | "replication_means"


def _t_interval(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    k = len(values)
    if k < 2:
        return mean, 0.0
    sem = values.std(ddof=1) / np.sqrt(k)
    return mean, float(sps.t.ppf(0.975, k - 1) * sem)


def estimate_waiting(metrics: list[RawMetrics]) -> Estimate:
    """Mean packet waiting time in slots, with a 95% interval.

    Requires every replication to carry at least 100 post-warmup waiting
    samples; raises InsufficientSamples otherwise.
    """
    if not metrics:
        raise InsufficientSamples("no replications supplied")
    counts = [len(m.waiting_times) for m in metrics]
    if min(counts) < MIN_SAMPLES:
        raise InsufficientSamples(
            f"need >= {MIN_SAMPLES} post-warmup waiting samples per replication, "
            f"got {counts}"
        )
    total = int(sum(counts))
    if len(metrics) == 1:
        waits = metrics[0].waiting_times
        usable = (len(waits) // BATCH_COUNT) * BATCH_COUNT
        batches = waits[:usable].reshape(BATCH_COUNT, -1).mean(axis=1)
        mean, half = _t_interval(batches)
        return Estimate(mean=mean, ci_half_width=half, n_samples=total, method="batch_means")
    rep_means = np.array([m.waiting_times.mean() for m in metrics])
    mean, half = _t_interval(rep_means)
    return Estimate(mean=mean, ci_half_width=half, n_samples=total, method="replication_means")


def estimate_throughput(metrics: list[RawMetrics]) -> Estimate:
    """Delivered packets per slot, pooled across replications.

    With a single replication the spread is not estimable from the scalar
    ratio and the half-width is reported as 0.
    """
    if not metrics:
        raise InsufficientSamples("no replications supplied")
    ratios = np.array([m.throughput() for m in metrics])
    mean, half = _t_interval(ratios)
    return Estimate(
        mean=mean,
        ci_half_width=half,
        n_samples=len(metrics),
        method="replication_means" if len(metrics) > 1 else "batch_means",
    )


@dataclass(frozen=True)
class DistributionComparison:
    """Empirical vs. reference law over a truncated support.

    tv_distance is half the L1 gap over k = 1..support_checked plus the
    gap of the lumped tails, i.e. the total variation distance of the two
    laws coarsened at the truncation point; always in [0, 1].
    """

    empirical: np.ndarray
    reference: np.ndarray
    tv_distance: float
    support_checked: int


def compare_qk(metrics: list[RawMetrics], laws: QueueLaws, tail_tol: float = 1e-9) -> DistributionComparison:
    """Compare sampled queue-start lengths against the geometric law.

    The reference is q_k = alpha (1-alpha)^(k-1), truncated where its
    tail falls below tail_tol.  Raises EmptyHistogram when no busy-period
    starts were sampled.
    """
    if not metrics:
        raise EmptyHistogram("no replications supplied")
    hist = np.zeros_like(metrics[0].qk_samples)
    for m in metrics:
        hist = hist + m.qk_samples
    total = hist.sum()
    if total == 0:
        raise EmptyHistogram("no queue-start samples recorded")

    alpha = laws.alpha
    support = 1
    while alpha * (1.0 - alpha) ** support >= tail_tol and support < len(hist) - 2:
        support += 1
    ks = np.arange(1, support + 1)
    reference = alpha * (1.0 - alpha) ** (ks - 1)
    empirical = hist[1 : support + 1] / total
    emp_tail = hist[support + 1 :].sum() / total
    ref_tail = max(0.0, 1.0 - reference.sum())
    tv = 0.5 * (np.abs(empirical - reference).sum() + abs(emp_tail - ref_tail))
    return DistributionComparison(
        empirical=empirical,
        reference=reference,
        tv_distance=float(tv),
        support_checked=support,
    )
