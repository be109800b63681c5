"""Closed-form throughput, stability, and delay results for batch-service
slotted Aloha.

Model summary.  n nodes share one slotted channel.  A backlogged node
attempts in a free slot with probability r; a lone attempter captures the
channel and transmits its gated batch (up to m packets) in consecutive
slots.  For large n the per-free-slot attempt count is nearly Poisson with
mean G (the attempt rate), which makes every steady-state quantity a
function of the tuple (n, lambda_hat, r, m) and G alone:

* the channel alternates competition periods of mean 1/(G e^-G) - 1 and
  busy periods of mean B, giving throughput B / (competition + B);
* each node behaves as a discrete-time queue whose "vacations" (spans
  between its own channel captures) are governed by the arrival process
  and by G;
* G itself solves a fixed-point equation that balances the queue-start
  distribution against the busy-period length it induces.

The waiting-time results come in three flavors: the general decomposition
(mean_waiting_time), the single-packet special case with its explicit
Lambert W form (mean_waiting_time_classical), and the unbounded-batch
case where delay is finite for every r in (0, 1)
(mean_waiting_time_batch_inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lambertw import lambert_w0, lambert_wm1
from .params import BATCH_INF, SystemParams

__all__ = [
    "AttemptSolution",
    "NoStableRoot",
    "QueueLaws",
    "StableRegion",
    "UnboundedDelay",
    "WaitingDecomposition",
    "busy_second_factorial_moment",
    "mean_busy_period",
    "mean_waiting_time",
    "mean_waiting_time_batch_inf",
    "mean_waiting_time_classical",
    "queue_laws",
    "saturated_throughput",
    "saturated_throughput_finite_n",
    "solve_attempt_rate",
    "stable_region",
    "throughput",
]

RESIDUAL_TOL = 1e-10


class NoStableRoot(Exception):
    """The attempt-rate fixed point has no solution for this operating point."""


class UnboundedDelay(Exception):
    """The mean waiting time diverges for this operating point."""


# ---------------------------------------------------------------------------
# Throughput
# ---------------------------------------------------------------------------

def saturated_throughput(params: SystemParams) -> float:
    """Channel throughput when every node always has packets to send.

    With all n nodes backlogged the attempt rate is G = n r, a capture
    costs 1/(G e^-G) - 1 free slots on average, and each capture delivers
    m packets, so the per-packet competition overhead is that cost divided
    by m.  An infinite batch amortizes the overhead away entirely and the
    cap is exactly 1.
    """
    if params.infinite_batch:
        return 1.0
    g = params.n * params.r
    overhead = (1.0 / (g * math.exp(-g)) - 1.0) / params.m
    return 1.0 / (overhead + 1.0)


def saturated_throughput_finite_n(params: SystemParams) -> float:
    """Saturated throughput with the exact binomial success probability.

    Replaces the Poisson success probability G e^-G by
    n r (1-r)^(n-1), the probability that exactly one of n nodes
    attempts.  Converges to saturated_throughput as n grows with n r
    held fixed.
    """
    if params.infinite_batch:
        return 1.0
    n, r = params.n, params.r
    p_one = n * r * (1.0 - r) ** (n - 1)
    if p_one <= 0.0:
        return 0.0
    overhead = (1.0 / p_one - 1.0) / params.m
    return 1.0 / (overhead + 1.0)


def throughput(params: SystemParams) -> float:
    """Carried load: the offered rate capped by the saturated throughput."""
    return min(params.lambda_hat, saturated_throughput(params))


# ---------------------------------------------------------------------------
# Stable throughput region
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StableRegion:
    """Transmission probabilities for which the offered load is carried.

    The region is the closed interval [lo, hi] intersected with (0, 1).
    ``empty`` marks offered loads beyond the saturation cap; with an
    unbounded batch the region is the whole unit interval and
    ``whole_unit_interval`` is set (lo and hi then read 0 and 1).
    """

    lo: float
    hi: float
    empty: bool = False
    whole_unit_interval: bool = False

    def contains(self, r: float) -> bool:
        if self.empty:
            return False
        if self.whole_unit_interval:
            return 0.0 < r < 1.0
        return self.lo <= r <= self.hi and 0.0 < r < 1.0

    def strictly_above_lo(self, r: float) -> bool:
        """Membership with the lower endpoint excluded (bounded-delay region)."""
        return self.contains(r) and r > self.lo


def stable_region(n: int, lambda_hat: float, m: float) -> StableRegion:
    """Interval of r keeping the network stable at offered load lambda_hat.

    The endpoints are -W0(y)/n and -W-1(y)/n with
    y = -lambda_hat / (m (1 - lambda_hat) + lambda_hat); the region is
    empty when lambda_hat exceeds m / (m + e - 1), where y drops below
    the Lambert branch point.
    """
    if not (0.0 < lambda_hat < 1.0):
        raise ValueError(f"lambda_hat must lie in (0, 1), got {lambda_hat!r}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n!r}")
    if m == BATCH_INF:
        return StableRegion(lo=0.0, hi=1.0, whole_unit_interval=True)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    if lambda_hat > m / (m + math.e - 1.0):
        return StableRegion(lo=math.nan, hi=math.nan, empty=True)
    y = -lambda_hat / (m * (1.0 - lambda_hat) + lambda_hat)
    lo = -lambert_w0(y) / n
    hi = -lambert_wm1(y) / n
    return StableRegion(lo=lo, hi=min(hi, 1.0))


# ---------------------------------------------------------------------------
# Attempt-rate fixed point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttemptSolution:
    """Solved attempt rate with solver diagnostics.

    g is the selected root of the fixed-point equation, residual the
    equation mismatch at g, bracket the final bisection interval, and
    all_roots every root located in (0, n r) in increasing order (more
    than one root signals coexisting operating points).
    """

    g: float
    residual: float
    bracket: tuple[float, float]
    all_roots: tuple[float, ...] = field(default_factory=tuple)


def _gate_power_sum(x: float, m: float) -> float:
    """Sum of x^j for j = 0 .. m-1, stable through x = 1.

    This is the expected number of packets gated when the queue-start
    distribution is geometric with success probability 1 - x; evaluating
    the sum instead of (1 - x^m)/(1 - x) removes the spurious 0/0 at
    x = 1 (all nodes backlogged).
    """
    if m == BATCH_INF:
        return math.inf if x == 1.0 else 1.0 / (1.0 - x)
    if x == 1.0:
        return float(m)
    lx = math.log(x)
    return math.expm1(m * lx) / math.expm1(lx)


def _poisson_success(g: float) -> float:
    return g * math.exp(-g)


def _fixed_point_roots(
    n: int,
    lambda_hat: float,
    r: float,
    m: float,
    success_fn=None,
    grid_points: int = 10_000,
) -> tuple[list[float], tuple[float, float], float]:
    """Locate every root of the attempt-rate balance on (0, n r).

    The equation is scanned in u = 1 - G/(n r) on a grid log-spaced toward
    both endpoints (roots can hug either end), each sign change is
    bisected, and near-tangent contacts at the saturation end are accepted
    when the residual is already below tolerance.  Returns (roots in
    increasing G, scanned bracket in G, smallest |residual| seen).
    """
    nr = n * r
    ratio = lambda_hat / (1.0 - lambda_hat)
    success = success_fn if success_fn is not None else _poisson_success

    def balance(u: float) -> float:
        g = nr * (1.0 - u)
        s = success(g)
        if s <= 0.0:
            return math.inf
        return _gate_power_sum(1.0 - u, m) - ratio * (1.0 / s - 1.0)

    # Congested roots hug u = 1 - G/(n r) = 0, and how tightly depends on
    # the success probability at the saturation edge; push the scan floor
    # below the 1/u = ratio/s crossing so such roots stay in view.
    floor = 1e-13
    s_edge = success(nr * (1.0 - 1e-16))
    if s_edge > 0.0:
        floor = max(1e-290, min(floor, 1e-3 * s_edge / ratio))
    half = grid_points // 2
    edge = np.geomspace(floor, 0.5, half)
    us = np.concatenate([edge, 1.0 - np.geomspace(1e-13, 0.5, half)[::-1]])
    vals = np.array([balance(u) for u in us])

    roots_u: list[tuple[float, float, float]] = []  # (u_root, u_lo, u_hi)
    for i in range(len(us) - 1):
        a, b = vals[i], vals[i + 1]
        if math.isnan(a) or math.isnan(b):
            continue
        if a == 0.0:
            roots_u.append((float(us[i]), float(us[i]), float(us[i])))
        elif (a < 0.0) != (b < 0.0):
            lo_u, hi_u = float(us[i]), float(us[i + 1])
            lo_neg = a < 0.0
            for _ in range(200):
                mid = 0.5 * (lo_u + hi_u)
                fm = balance(mid)
                if (fm < 0.0) == lo_neg:
                    lo_u = mid
                else:
                    hi_u = mid
            roots_u.append((0.5 * (lo_u + hi_u), lo_u, hi_u))
    if vals[-1] == 0.0:
        roots_u.append((float(us[-1]), float(us[-1]), float(us[-1])))

    best = min((abs(v) for v in vals if math.isfinite(v)), default=math.inf)
    if not roots_u and best <= RESIDUAL_TOL:
        # Tangency at the saturation boundary: the two roots have merged.
        i = int(np.nanargmin(np.abs(np.where(np.isfinite(vals), vals, np.nan))))
        roots_u.append((float(us[i]), float(us[i]), float(us[i])))

    # u decreasing means G increasing; bracket endpoints swap accordingly
    found = sorted(
        ((nr * (1.0 - u), (nr * (1.0 - hi_u), nr * (1.0 - lo_u)))
         for u, lo_u, hi_u in roots_u),
        key=lambda t: t[0],
    )
    deduped: list[tuple[float, tuple[float, float]]] = []
    for g, bracket in found:
        if not deduped or g - deduped[-1][0] > 1e-9 * nr:
            deduped.append((g, bracket))
    scan = (nr * 1e-13, nr * (1.0 - floor))
    return deduped, scan, best


def attempt_rate_residual(params: SystemParams, g: float) -> float:
    """Mismatch of the attempt-rate balance at a candidate g."""
    x = g / (params.n * params.r)
    ratio = params.lambda_hat / (1.0 - params.lambda_hat)
    return _gate_power_sum(x, params.m) - ratio * (1.0 / _poisson_success(g) - 1.0)


def solve_attempt_rate(params: SystemParams, grid_points: int = 10_000) -> AttemptSolution:
    """Solve for the attempt rate G at a stable operating point.

    Requires r inside the stable region.  Among the roots in (0, n r) the
    smallest is returned: a stable network settles at the low-contention
    operating point (for m = 1 this is -W0(-lambda_hat), independent of
    r).  All located roots are reported for diagnosis of coexisting
    operating points.

    Raises NoStableRoot when r lies outside the stable region or no root
    is found.
    """
    region = stable_region(params.n, params.lambda_hat, params.m)
    if not region.contains(params.r):
        raise NoStableRoot(
            f"r={params.r!r} outside the stable region "
            f"{'(empty)' if region.empty else f'[{region.lo:.6g}, {region.hi:.6g}]'} "
            f"for n={params.n}, lambda_hat={params.lambda_hat}, m={params.batch_label()}"
        )
    roots, scan, _ = _fixed_point_roots(
        params.n, params.lambda_hat, params.r, params.m, grid_points=grid_points
    )
    if not roots:
        raise NoStableRoot(
            f"no sign change of the attempt-rate balance over G in "
            f"({scan[0]:.3g}, {scan[1]:.3g})"
        )
    g, bracket = roots[0]
    return AttemptSolution(
        g=g,
        residual=attempt_rate_residual(params, g),
        bracket=bracket,
        all_roots=tuple(g for g, _ in roots),
    )


# ---------------------------------------------------------------------------
# Steady-state queue laws
# ---------------------------------------------------------------------------

def mean_busy_period(lambda_hat: float, g: float) -> float:
    """Mean number of packets per channel capture in a stable network.

    Balancing carried load against the channel cycle gives
    (lambda_hat / (1 - lambda_hat)) * (1/(g e^-g) - 1).
    """
    if not (0.0 < lambda_hat < 1.0):
        raise ValueError(f"lambda_hat must lie in (0, 1), got {lambda_hat!r}")
    if g <= 0.0:
        raise ValueError(f"attempt rate must be positive, got {g!r}")
    s = _poisson_success(g)
    if s <= 0.0:
        raise ValueError(f"degenerate success probability at g={g!r}")
    return lambda_hat / (1.0 - lambda_hat) * (1.0 / s - 1.0)


def busy_second_factorial_moment(x: float, m: float) -> float:
    """E[B (B - 1)] for the busy length B = min(Q, m), Q geometric.

    Q starts at 1 with P(Q = k) = (1-x) x^(k-1).  The defining series
    sum_{k<m} k (k-1) q_k + m (m-1) P(Q >= m) collapses to the closed
    geometric form 2x (1 - m (1-x) x^(m-1) - x^m) / (1-x)^2; the m = 1
    case is identically 0 and the unbounded-batch limit is 2x/(1-x)^2.
    """
    if not (0.0 <= x < 1.0):
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    if m == BATCH_INF:
        return 2.0 * x / (1.0 - x) ** 2
    m = int(m)
    if m == 1:
        return 0.0
    xm1 = x ** (m - 1)
    return 2.0 * x * (1.0 - m * (1.0 - x) * xm1 - x * xm1) / (1.0 - x) ** 2


@dataclass(frozen=True)
class QueueLaws:
    """Steady-state per-node laws at a given attempt rate.

    alpha parametrizes the geometric queue-start law q_k = alpha
    (1-alpha)^(k-1); p0 is the large-n probability of an empty buffer at
    a busy-period end (1 - (g/nr)^m) and p0_exact its exact geometric-sum
    form; beta parametrizes the geometric law of arrivals during a
    vacation; y1_mean / y0_mean are the mean vacations started with a
    non-empty / empty buffer; mean_busy is the mean busy-period length,
    busy_factorial2 its second factorial moment; g1 is the per-free-slot
    success probability g e^-g and l0 the chance a busy period sees no
    arrival.
    """

    alpha: float
    p0: float
    p0_exact: float
    beta: float
    mean_busy: float
    busy_factorial2: float
    y1_mean: float
    y0_mean: float
    g1: float
    l0: float

    def qk(self, k: int) -> float:
        """Queue length law at busy-period starts, k = 1, 2, ..."""
        if k < 1:
            raise ValueError("queue-start length starts at 1")
        return self.alpha * (1.0 - self.alpha) ** (k - 1)


def queue_laws(params: SystemParams, g: float) -> QueueLaws:
    """Derive all steady-state laws from the solved attempt rate.

    Requires 0 < g < n r so that alpha = 1 - g/(n r) stays positive.
    """
    n, lam, lh, r, m = params.n, params.lam, params.lambda_hat, params.r, params.m
    nr = n * r
    if not (0.0 < g < nr):
        raise ValueError(f"attempt rate must lie in (0, n*r)=(0, {nr:.6g}), got {g!r}")
    x = g / nr
    alpha = 1.0 - x
    e_g = math.exp(-g)
    g1 = g * e_g

    denom = 1.0 - (1.0 - lam) * x
    if m == BATCH_INF:
        p0_exact = (1.0 - lam) * alpha / denom
        p0 = 1.0
        l0 = p0_exact
    else:
        mi = int(m)
        p0_exact = (1.0 - lam) * alpha * (1.0 - ((1.0 - lam) * x) ** mi) / denom
        p0 = 1.0 - x ** mi
        # P(no arrival during a busy period): busy length is min(Q, m).
        head = sum(alpha * x ** (j - 1) * (1.0 - lam) ** j for j in range(1, mi))
        l0 = head + x ** (mi - 1) * (1.0 - lam) ** mi

    # Vacation started with a non-empty buffer: renewal analysis of the
    # competition process gives the geometric parameter beta and the mean.
    num = (1.0 - lh) * (1.0 - r * e_g) + (1.0 - r) * (lh - g1)
    den = (1.0 - lh) * r * e_g
    y1_mean = num / den
    beta = den / (den + lam * num)
    y0_mean = 1.0 / lam + y1_mean

    return QueueLaws(
        alpha=alpha,
        p0=p0,
        p0_exact=p0_exact,
        beta=beta,
        mean_busy=mean_busy_period(lh, g),
        busy_factorial2=busy_second_factorial_moment(x, m),
        y1_mean=y1_mean,
        y0_mean=y0_mean,
        g1=g1,
        l0=l0,
    )


# ---------------------------------------------------------------------------
# Mean waiting time
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaitingDecomposition:
    """Mean waiting time split into its three components.

    total_wait = residual_vacation + queue_component + complete_vacations:
    the residual of the vacation a packet lands in, the service of the
    packets queued ahead of it (queue_component = lam * total_wait by
    Little's law), and the complete vacations it sits through because
    earlier packets fill whole batches.  prob_xi0 / prob_xi1 split the
    probability of arriving during a vacation by whether that vacation
    started with an empty buffer; they sum to 1 - lam.
    """

    residual_vacation: float
    queue_component: float
    complete_vacations: float
    expected_vacation_count: float
    prob_xi0: float
    prob_xi1: float
    total_wait: float


def mean_waiting_time(params: SystemParams) -> WaitingDecomposition:
    """Large-n mean waiting time for a general batch size.

    total_wait = y1 * (1 - (1+lam) B2 / (2 m B)) / (1 - lam - lam y1 / m)
    with y1 the mean non-empty-start vacation, B / B2 the busy period's
    mean and second factorial moment.

    Raises UnboundedDelay when r is not strictly above the lower stable
    endpoint (the open end of the bounded-delay region) or the queueing
    denominator is non-positive.
    """
    region = stable_region(params.n, params.lambda_hat, params.m)
    if not region.strictly_above_lo(params.r):
        raise UnboundedDelay(
            f"r={params.r!r} outside the bounded-delay region for "
            f"n={params.n}, lambda_hat={params.lambda_hat}, m={params.batch_label()}"
        )
    sol = solve_attempt_rate(params)
    laws = queue_laws(params, sol.g)
    lam, m = params.lam, params.m
    y1 = laws.y1_mean

    if params.infinite_batch:
        batch_correction = 0.0
        queue_pressure = 0.0
    else:
        batch_correction = (1.0 + lam) * laws.busy_factorial2 / (2.0 * m * laws.mean_busy)
        queue_pressure = lam * y1 / m
    denominator = 1.0 - lam - queue_pressure
    if denominator <= 0.0:
        raise UnboundedDelay(
            f"queueing denominator {denominator:.3g} <= 0 at r={params.r!r}"
        )
    total = y1 * (1.0 - batch_correction) / denominator

    expected_vacations = lam + (0.0 if params.infinite_batch else lam * total / m) - batch_correction
    u1_mean = lam * y1  # arrivals in a non-empty-start vacation
    u0_mean = 1.0 + u1_mean
    weight = laws.p0 * u0_mean + (1.0 - laws.p0) * u1_mean
    prob_xi0 = laws.p0 * u0_mean / weight * (1.0 - lam)
    prob_xi1 = (1.0 - laws.p0) * u1_mean / weight * (1.0 - lam)

    return WaitingDecomposition(
        residual_vacation=(1.0 - lam) * y1,
        queue_component=lam * total,
        complete_vacations=expected_vacations * y1,
        expected_vacation_count=expected_vacations,
        prob_xi0=prob_xi0,
        prob_xi1=prob_xi1,
        total_wait=total,
    )


def mean_waiting_time_classical(params: SystemParams) -> float:
    """Mean waiting time of single-packet (m = 1) slotted Aloha.

    (1 - r e^W0(-lambda_hat)) / (r e^W0(-lambda_hat) - lam), finite for
    r strictly above -W0(-lambda_hat)/n and up to -W-1(-lambda_hat)/n.
    """
    if params.m != 1:
        raise ValueError(f"classical form requires m=1, got m={params.batch_label()}")
    region = stable_region(params.n, params.lambda_hat, 1)
    if not region.strictly_above_lo(params.r):
        raise UnboundedDelay(
            f"r={params.r!r} outside the bounded-delay region "
            f"(-W0/n, -W-1/n] for lambda_hat={params.lambda_hat}, n={params.n}"
        )
    re_g = params.r * math.exp(lambert_w0(-params.lambda_hat))
    denom = re_g - params.lam
    if denom <= 0.0:
        raise UnboundedDelay(f"vanishing service margin at r={params.r!r}")
    return (1.0 - re_g) / denom


def _binomial_success(n: int):
    def success(g: float) -> float:
        return g * (1.0 - g / n) ** (n - 1)

    return success


def mean_waiting_time_batch_inf(params: SystemParams, finite_n_correction: bool = False) -> float:
    """Mean waiting time with an unbounded batch, finite for all r in (0, 1).

    Evaluates (1 / (lam (1 - lam) (1 - lambda_hat))) *
    (lambda_hat / s(G) - 1) where s is the per-free-slot success
    probability: the Poisson form G e^-G, or with finite_n_correction the
    exact binomial form G (1 - G/n)^(n-1), in which case the same
    replacement is applied inside the fixed point before solving.

    When several fixed points coexist (large n r), the largest root is
    used: an unbounded-batch system under heavy contention operates with
    almost every node backlogged, and the delay is governed by that
    congested operating point.
    """
    if not params.infinite_batch:
        raise ValueError(f"requires m=BATCH_INF, got m={params.batch_label()}")
    success = _binomial_success(params.n) if finite_n_correction else None
    roots, scan, _ = _fixed_point_roots(
        params.n, params.lambda_hat, params.r, BATCH_INF, success_fn=success
    )
    if not roots:
        raise NoStableRoot(
            f"no root of the unbounded-batch balance over G in "
            f"({scan[0]:.3g}, {scan[1]:.3g})"
        )
    g = roots[-1][0]
    s = (_binomial_success(params.n) if finite_n_correction else _poisson_success)(g)
    lam = params.lam
    return (params.lambda_hat / s - 1.0) / (lam * (1.0 - lam) * (1.0 - params.lambda_hat))
