"""Compiled slot-by-slot kernel of the batch-service Aloha simulator.

One call simulates a full replication.  Slot order (mirrored exactly by
the pure-Python reference in sim.py, including the RNG draw sequence):

1. arrivals: each node due this slot enqueues one packet and redraws its
   next arrival slot (geometric gaps reproduce independent Bernoulli(lam)
   arrivals without per-node-per-slot draws);
2. channel busy: the holder transmits one gated packet; when the last one
   departs the channel frees at the slot boundary (the next slot is a
   contention slot) and the holder's vacation starts, tagged by whether
   its buffer emptied;
3. channel free: the attempt count among the k backlogged nodes is
   Binomial(k, r), sampled by geometric skips; exactly one attempt
   captures the channel, gates min(queue, m) packets and transmits the
   first of them in this same slot.

Waiting time is transmission slot minus arrival slot.  Events are
recorded only from `warmup` on; conservation counters cover the full run.
"""

import numpy as np
from numba import njit

from .rng import geometric, uniform

QK_CAP = 2048       # queue-start histogram bins; larger lengths pile on the last bin
BUSY_CAP = 2048
VAC_CAP = 1 << 15
_NEVER = np.int64(1) << np.int64(62)


@njit(cache=True)
def run_slots(n, lam, r, m_cap, total_slots, warmup, seed, saturated):
    """Simulate total_slots slots; returns raw event records (see sim.py)."""
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed  # seed arrives as np.uint64
    log1m_r = np.log1p(-r) if r < 1.0 else 0.0
    log1m_lam = np.log1p(-lam) if 0.0 < lam < 1.0 else 0.0

    cap = 64
    buf = np.zeros((n, cap), dtype=np.int64)   # per-node FIFO rings of arrival slots
    head = np.zeros(n, dtype=np.int64)
    cnt = np.zeros(n, dtype=np.int64)

    bl_nodes = np.empty(n, dtype=np.int64)     # backlogged set, swap-remove order
    bl_pos = np.full(n, -1, dtype=np.int64)
    bl_count = 0

    next_arr = np.full(n, _NEVER, dtype=np.int64)
    if not saturated:
        for i in range(n):
            next_arr[i] = -1 + geometric(state, log1m_lam)
    next_min = _NEVER
    for i in range(n):
        if next_arr[i] < next_min:
            next_min = next_arr[i]

    wcap = 1 << 16
    waits = np.empty(wcap, dtype=np.int64)
    nwaits = 0

    qk_hist = np.zeros(QK_CAP + 1, dtype=np.int64)
    busy_hist = np.zeros(BUSY_CAP + 1, dtype=np.int64)
    vac_hist = np.zeros((2, VAC_CAP + 1), dtype=np.int64)
    att_hist = np.zeros(n + 1, dtype=np.int64)
    v_start = np.full(n, -1, dtype=np.int64)
    v_type = np.zeros(n, dtype=np.int64)

    holder = -1
    remaining = 0
    delivered = 0        # post-warmup departures
    delivered_all = 0    # full-run departures (conservation)
    arrivals_all = 0
    free_slots = 0

    for t in range(total_slots):
        if not saturated and t == next_min:
            for i in range(n):
                if next_arr[i] == t:
                    if cnt[i] == cap:
                        ncap = cap * 2
                        nbuf = np.zeros((n, ncap), dtype=np.int64)
                        for j in range(n):
                            for kk in range(cnt[j]):
                                nbuf[j, kk] = buf[j, (head[j] + kk) % cap]
                            head[j] = 0
                        buf = nbuf
                        cap = ncap
                    buf[i, (head[i] + cnt[i]) % cap] = t
                    cnt[i] += 1
                    arrivals_all += 1
                    if cnt[i] == 1:
                        bl_nodes[bl_count] = i
                        bl_pos[i] = bl_count
                        bl_count += 1
                    next_arr[i] = t + geometric(state, log1m_lam)
            nm = _NEVER
            for i in range(n):
                if next_arr[i] < nm:
                    nm = next_arr[i]
            next_min = nm

        if holder >= 0:
            w = holder
            remaining -= 1
            delivered_all += 1
            if saturated:
                if t >= warmup:
                    delivered += 1
            else:
                a_slot = buf[w, head[w] % cap]
                head[w] = (head[w] + 1) % cap
                cnt[w] -= 1
                if t >= warmup:
                    delivered += 1
                    if nwaits == wcap:
                        wcap *= 2
                        grown = np.empty(wcap, dtype=np.int64)
                        grown[:nwaits] = waits[:nwaits]
                        waits = grown
                    waits[nwaits] = t - a_slot
                    nwaits += 1
            if remaining == 0:
                holder = -1
                v_start[w] = t + 1
                if saturated:
                    v_type[w] = 1
                else:
                    v_type[w] = 1 if cnt[w] > 0 else 0
                    if cnt[w] == 0:
                        p = bl_pos[w]
                        last = bl_nodes[bl_count - 1]
                        bl_nodes[p] = last
                        bl_pos[last] = p
                        bl_pos[w] = -1
                        bl_count -= 1
        else:
            k = n if saturated else bl_count
            attempts = 0
            first_pos = -1
            if k > 0:
                if r >= 1.0:
                    attempts = k
                    first_pos = 1
                else:
                    pos = 0
                    while True:
                        pos += geometric(state, log1m_r)
                        if pos <= k:
                            attempts += 1
                            if attempts == 1:
                                first_pos = pos
                        else:
                            break
            if t >= warmup:
                free_slots += 1
                att_hist[attempts if attempts <= n else n] += 1
            if attempts == 1:
                w = first_pos - 1 if saturated else bl_nodes[first_pos - 1]
                a_slot = np.int64(0)
                qlen = m_cap if saturated else cnt[w]
                gated = qlen if qlen < m_cap else m_cap
                if t >= warmup:
                    if not saturated:
                        qk_hist[qlen if qlen <= QK_CAP else QK_CAP] += 1
                    busy_hist[gated if gated <= BUSY_CAP else BUSY_CAP] += 1
                    if v_start[w] >= 0:
                        vl = t - v_start[w]
                        vac_hist[v_type[w], vl if vl <= VAC_CAP else VAC_CAP] += 1
                # first gated packet goes out in the capture slot itself
                delivered_all += 1
                if not saturated:
                    a_slot = buf[w, head[w] % cap]
                    head[w] = (head[w] + 1) % cap
                    cnt[w] -= 1
                if t >= warmup:
                    delivered += 1
                    if not saturated:
                        if nwaits == wcap:
                            wcap *= 2
                            grown = np.empty(wcap, dtype=np.int64)
                            grown[:nwaits] = waits[:nwaits]
                            waits = grown
                        waits[nwaits] = t - a_slot
                        nwaits += 1
                if gated > 1:
                    holder = w
                    remaining = gated - 1
                else:
                    v_start[w] = t + 1
                    if saturated:
                        v_type[w] = 1
                    else:
                        v_type[w] = 1 if cnt[w] > 0 else 0
                        if cnt[w] == 0:
                            p = bl_pos[w]
                            last = bl_nodes[bl_count - 1]
                            bl_nodes[p] = last
                            bl_pos[last] = p
                            bl_pos[w] = -1
                            bl_count -= 1

    backlog = np.int64(0)
    for i in range(n):
        backlog += cnt[i]
    return (
        waits[:nwaits].copy(),
        delivered,
        delivered_all,
        arrivals_all,
        backlog,
        qk_hist,
        busy_hist,
        vac_hist,
        att_hist,
        free_slots,
    )
