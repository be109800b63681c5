"""System parameters shared by the analytic engine and the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["BATCH_INF", "SystemParams"]

#: Distinguished batch size meaning "the whole queue is gated on success".
BATCH_INF = math.inf


@dataclass(frozen=True)
class SystemParams:
    """Operating point of a batch-service slotted Aloha network.

    Attributes:
        n: number of nodes (>= 1).
        lambda_hat: aggregate arrival rate in packets/slot, in (0, 1).
            Each node independently receives at most one packet per slot,
            so the per-node arrival probability is lambda_hat / n.
        r: transmission probability of a backlogged node in a free slot,
            in (0, 1].  r = 1 is accepted for deterministic hand traces;
            the analytic stability results require r < 1.
        m: batch size, a positive integer or BATCH_INF.  A node winning
            the channel gates min(queue, m) packets and transmits them in
            consecutive slots.
    """

    n: int
    lambda_hat: float
    r: float
    m: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (0.0 < self.lambda_hat < 1.0):
            raise ValueError(
                f"lambda_hat must lie in (0, 1): each node sees at most one "
                f"packet arrival per slot, got {self.lambda_hat!r}"
            )
        if not (0.0 < self.r <= 1.0):
            raise ValueError(f"r must lie in (0, 1], got {self.r!r}")
        if self.m != BATCH_INF and (self.m != int(self.m) or self.m < 1):
            raise ValueError(f"m must be a positive integer or BATCH_INF, got {self.m!r}")

    @property
    def lam(self) -> float:
        """Per-node arrival probability per slot, lambda_hat / n."""
        return self.lambda_hat / self.n

    @property
    def infinite_batch(self) -> bool:
        return self.m == BATCH_INF

    def batch_label(self) -> str:
        """Render the batch size as 'inf' or a plain integer string."""
        return "inf" if self.infinite_batch else str(int(self.m))
