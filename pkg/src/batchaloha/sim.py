"""Slot-level stochastic simulator of batch-service slotted Aloha.

Protocol semantics per slot:

1. each node receives a packet with probability lam (disabled in
   saturated mode, where queues never empty);
2. on a free slot every backlogged node attempts with probability r.  A
   lone attempter gates the first min(queue, m) packets, transmits the
   first of them in this same slot, and holds the channel for the rest of
   the batch; zero or multiple attempts leave the channel free;
3. on a held slot the holder transmits one gated packet; after the last
   one the channel frees at the slot boundary, so the following slot is
   again a contention slot.

Packets arriving at the beginning of the capture slot are gate-eligible;
packets arriving during the holder's own busy period stay outside the
gate and wait for a later capture.  Waiting time is transmission slot
minus arrival slot (0 for a packet served in its arrival slot); service
adds one further slot on top.

Two implementations share these semantics and the exact RNG draw order:
the compiled kernel in _kernel.py (used by run/replicate) and the
pure-Python SlotSimulator reference below, kept for slot-by-slot
inspection and cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .params import BATCH_INF, SystemParams
from .rng import derive_seed, geometric, make_state

__all__ = [
    "RawMetrics",
    "SimConfig",
    "SlotSimulator",
    "replicate",
    "run",
    "run_saturated",
]


@dataclass(frozen=True)
class SimConfig:
    """One simulation run request.

    saturated disables arrivals and keeps every node permanently
    backlogged.  A saturated run with m = BATCH_INF never releases the
    channel and is rejected unless saturated_cap names the finite batch
    to substitute; the cap used is reported in the metrics.
    """

    params: SystemParams
    total_slots: int
    warmup_slots: int = 0
    seed: int = 0
    saturated: bool = False
    replications: int = 1
    saturated_cap: int = 0

    def __post_init__(self) -> None:
        if self.total_slots <= 0:
            raise ValueError("total_slots must be positive")
        if not (0 <= self.warmup_slots < self.total_slots):
            raise ValueError("warmup_slots must satisfy 0 <= warmup < total_slots")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")


@dataclass
class RawMetrics:
    """Raw event records of one replication (post-warmup unless noted).

    waiting_times holds one entry per delivered packet; qk_samples counts
    queue lengths seen at busy-period starts; busy_lengths counts gated
    batch sizes; vacation_y1 / vacation_y0 count vacation lengths tagged
    by whether the vacation started with a non-empty buffer;
    free_slot_attempts counts per-free-slot attempt totals.  Histograms
    accumulate overflow on their last bin so they always sum to their
    sample counts.  delivered_all / total_arrivals / final_backlog cover
    the full run including warmup: delivered_all + final_backlog equals
    total_arrivals exactly.
    """

    waiting_times: np.ndarray
    delivered: int
    elapsed_slots: int
    qk_samples: np.ndarray
    busy_lengths: np.ndarray
    vacation_y1: np.ndarray
    vacation_y0: np.ndarray
    free_slot_attempts: np.ndarray
    free_slots: int
    delivered_all: int
    total_arrivals: int
    final_backlog: int
    seed: int
    saturated_cap_used: int = 0

    def throughput(self) -> float:
        return self.delivered / self.elapsed_slots

    def mean_attempts_per_free_slot(self) -> float:
        counts = self.free_slot_attempts
        total = counts.sum()
        if total == 0:
            return math.nan
        return float((np.arange(len(counts)) * counts).sum() / total)


def _effective_batch(config: SimConfig) -> tuple[int, int]:
    """Kernel batch cap and the reported saturated substitution (0 if none)."""
    if config.params.infinite_batch:
        if config.saturated:
            if config.saturated_cap >= 1:
                return config.saturated_cap, config.saturated_cap
            raise ValueError(
                "saturated run with an infinite batch never releases the "
                "channel (throughput is trivially 1); set saturated_cap to "
                "a finite proxy batch size to simulate one"
            )
        return int(2**62), 0
    return int(config.params.m), 0


def _run_seeded(config: SimConfig, seed: int) -> RawMetrics:
    m_cap, cap_used = _effective_batch(config)
    p = config.params
    (waits, delivered, delivered_all, arrivals_all, backlog,
     qk_hist, busy_hist, vac_hist, att_hist, free_slots) = _kernel.run_slots(
        p.n,
        0.0 if config.saturated else p.lam,
        p.r,
        m_cap,
        config.total_slots,
        config.warmup_slots,
        np.uint64(seed),
        config.saturated,
    )
    return RawMetrics(
        waiting_times=waits,
        delivered=int(delivered),
        elapsed_slots=config.total_slots - config.warmup_slots,
        qk_samples=qk_hist,
        busy_lengths=busy_hist,
        vacation_y1=vac_hist[1],
        vacation_y0=vac_hist[0],
        free_slot_attempts=att_hist,
        free_slots=int(free_slots),
        delivered_all=int(delivered_all),
        total_arrivals=int(arrivals_all),
        final_backlog=int(backlog),
        seed=seed,
        saturated_cap_used=cap_used,
    )


def run(config: SimConfig) -> RawMetrics:
    """Run one replication; bit-identical output for identical configs."""
    return _run_seeded(config, derive_seed(config.seed, 0))


def replicate(config: SimConfig) -> list[RawMetrics]:
    """Run config.replications independent replications.

    Replication j uses the decorrelated sub-seed derive_seed(seed, j),
    so the list is order-stable and each entry individually reproducible;
    replicate(config)[0] equals run(config).
    """
    return [_run_seeded(config, derive_seed(config.seed, j)) for j in range(config.replications)]


def run_saturated(config: SimConfig) -> float:
    """Throughput (packets/slot) of a saturated run."""
    if not config.saturated:
        raise ValueError("run_saturated requires the saturated flag")
    return run(config).throughput()


# ---------------------------------------------------------------------------
# Pure-Python reference implementation
# ---------------------------------------------------------------------------

@dataclass
class _Node:
    queue: list[int] = field(default_factory=list)  # arrival slots, FIFO
    next_arrival: int = 1 << 62
    vacation_start: int = -1
    vacation_type: int = 0


class SlotSimulator:
    """Readable single-stepping twin of the compiled kernel.

    Consumes the identical RNG stream in the identical order, so a full
    run reproduces the kernel's RawMetrics bit for bit (cross-checked in
    the test suite).  Intended for protocol inspection and hand traces,
    not for long runs.
    """

    def __init__(self, config: SimConfig, seed: int | None = None):
        self.config = config
        p = config.params
        self.m_cap, self.saturated_cap_used = _effective_batch(config)
        self.lam = 0.0 if config.saturated else p.lam
        self.r = p.r
        self.n = p.n
        self.state = make_state(derive_seed(config.seed, 0) if seed is None else seed)
        self.log1m_r = np.log1p(-p.r) if p.r < 1.0 else 0.0
        self.log1m_lam = np.log1p(-self.lam) if 0.0 < self.lam < 1.0 else 0.0

        self.nodes = [_Node() for _ in range(self.n)]
        self.backlog_order: list[int] = []     # backlogged node ids, swap-remove order
        self.holder = -1
        self.remaining = 0
        self.t = 0

        if not config.saturated:
            for node in self.nodes:
                node.next_arrival = -1 + int(geometric(self.state, self.log1m_lam))

        self.waits: list[int] = []
        self.delivered = 0
        self.delivered_all = 0
        self.total_arrivals = 0
        self.free_slots = 0
        self.qk_samples = np.zeros(_kernel.QK_CAP + 1, dtype=np.int64)
        self.busy_lengths = np.zeros(_kernel.BUSY_CAP + 1, dtype=np.int64)
        self.vacations = np.zeros((2, _kernel.VAC_CAP + 1), dtype=np.int64)
        self.free_slot_attempts = np.zeros(self.n + 1, dtype=np.int64)

    # -- helpers ----------------------------------------------------------
    def _post_warmup(self) -> bool:
        return self.t >= self.config.warmup_slots

    def _remove_backlogged(self, i: int) -> None:
        pos = self.backlog_order.index(i)
        last = self.backlog_order[-1]
        self.backlog_order[pos] = last
        self.backlog_order.pop()

    def _start_vacation(self, i: int) -> None:
        node = self.nodes[i]
        node.vacation_start = self.t + 1
        if self.config.saturated:
            node.vacation_type = 1
        else:
            node.vacation_type = 1 if node.queue else 0
            if not node.queue:
                self._remove_backlogged(i)

    def _deliver(self, i: int) -> None:
        self.delivered_all += 1
        if self.config.saturated:
            if self._post_warmup():
                self.delivered += 1
            return
        arrival = self.nodes[i].queue.pop(0)
        if self._post_warmup():
            self.delivered += 1
            self.waits.append(self.t - arrival)

    # -- one slot ---------------------------------------------------------
    def step(self) -> None:
        """Advance the simulation by one slot."""
        t = self.t
        if not self.config.saturated:
            due = [i for i in range(self.n) if self.nodes[i].next_arrival == t]
            for i in due:
                node = self.nodes[i]
                node.queue.append(t)
                self.total_arrivals += 1
                if len(node.queue) == 1:
                    self.backlog_order.append(i)
                node.next_arrival = t + int(geometric(self.state, self.log1m_lam))

        if self.holder >= 0:
            w = self.holder
            self.remaining -= 1
            self._deliver(w)
            if self.remaining == 0:
                self.holder = -1
                self._start_vacation(w)
        else:
            k = self.n if self.config.saturated else len(self.backlog_order)
            attempts = 0
            first_pos = -1
            if k > 0:
                if self.r >= 1.0:
                    attempts, first_pos = k, 1
                else:
                    pos = 0
                    while True:
                        pos += int(geometric(self.state, self.log1m_r))
                        if pos <= k:
                            attempts += 1
                            if attempts == 1:
                                first_pos = pos
                        else:
                            break
            if self._post_warmup():
                self.free_slots += 1
                self.free_slot_attempts[min(attempts, self.n)] += 1
            if attempts == 1:
                w = (first_pos - 1) if self.config.saturated else self.backlog_order[first_pos - 1]
                node = self.nodes[w]
                qlen = self.m_cap if self.config.saturated else len(node.queue)
                gated = min(qlen, self.m_cap)
                if self._post_warmup():
                    if not self.config.saturated:
                        self.qk_samples[min(qlen, _kernel.QK_CAP)] += 1
                    self.busy_lengths[min(gated, _kernel.BUSY_CAP)] += 1
                    if node.vacation_start >= 0:
                        vl = min(t - node.vacation_start, _kernel.VAC_CAP)
                        self.vacations[node.vacation_type, vl] += 1
                self._deliver(w)
                if gated > 1:
                    self.holder = w
                    self.remaining = gated - 1
                else:
                    self._start_vacation(w)
        self.t += 1

    def run(self, slots: int | None = None) -> RawMetrics:
        """Step through `slots` slots (default: the configured total)."""
        target = self.config.total_slots if slots is None else slots
        while self.t < target:
            self.step()
        return self.metrics()

    def metrics(self) -> RawMetrics:
        backlog = sum(len(nd.queue) for nd in self.nodes)
        return RawMetrics(
            waiting_times=np.array(self.waits, dtype=np.int64),
            delivered=self.delivered,
            elapsed_slots=self.t - self.config.warmup_slots,
            qk_samples=self.qk_samples.copy(),
            busy_lengths=self.busy_lengths.copy(),
            vacation_y1=self.vacations[1].copy(),
            vacation_y0=self.vacations[0].copy(),
            free_slot_attempts=self.free_slot_attempts.copy(),
            free_slots=self.free_slots,
            delivered_all=self.delivered_all,
            total_arrivals=self.total_arrivals,
            final_backlog=backlog,
            seed=-1,
            saturated_cap_used=self.saturated_cap_used,
        )
