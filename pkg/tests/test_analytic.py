"""Analytic engine: throughput, stability, fixed point, queue laws, delay."""

import math

import numpy as np
import pytest

from batchaloha import analytic
from batchaloha.analytic import (
    NoStableRoot,
    UnboundedDelay,
    busy_second_factorial_moment,
    mean_busy_period,
    mean_waiting_time,
    mean_waiting_time_batch_inf,
    mean_waiting_time_classical,
    queue_laws,
    saturated_throughput,
    saturated_throughput_finite_n,
    solve_attempt_rate,
    stable_region,
    throughput,
)
from batchaloha.params import BATCH_INF, SystemParams


def params(n=30, lh=0.3, r=0.03, m=1):
    return SystemParams(n=n, lambda_hat=lh, r=r, m=m)


# ---------------------------------------------------------------------------
# Saturated throughput
# ---------------------------------------------------------------------------

class TestSaturatedThroughput:
    def test_single_packet_peak(self):
        # at r = 1/n the attempt rate is 1 and the cap is 1/e
        assert saturated_throughput(params(r=1 / 30, m=1)) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_two_packet_peak(self):
        value = saturated_throughput(params(r=1 / 30, m=2))
        assert value == pytest.approx(2 / (2 + math.e - 1), abs=1e-12)
        assert value == pytest.approx(0.538, abs=5e-4)

    def test_infinite_batch_is_full_capacity(self):
        assert saturated_throughput(params(n=50, lh=0.5, r=0.4, m=BATCH_INF)) == 1.0

    def test_peak_location(self):
        n = 30
        rs = np.linspace(0.005, 0.3, 200)
        vals = [saturated_throughput(params(r=float(r), m=3)) for r in rs]
        assert abs(rs[int(np.argmax(vals))] - 1 / n) < 0.005

    def test_monotone_in_batch_size(self):
        vals = [saturated_throughput(params(r=0.02, m=m)) for m in (1, 2, 3, 5, 10)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestFiniteNThroughput:
    def test_two_node_coin_flip(self):
        assert saturated_throughput_finite_n(params(n=2, lh=0.5, r=0.5, m=1)) == pytest.approx(0.5, abs=1e-12)

    def test_binomial_single_packet(self):
        expected = (1 - 1 / 30) ** 29
        assert saturated_throughput_finite_n(params(r=1 / 30, m=1)) == pytest.approx(expected, abs=1e-12)

    def test_infinite_batch(self):
        assert saturated_throughput_finite_n(params(lh=0.5, r=0.9, m=BATCH_INF)) == 1.0

    def test_converges_to_poisson_form(self):
        gaps = []
        for n in (10, 100, 1000, 10000):
            p = params(n=n, r=1.0 / n, m=2)
            gaps.append(abs(saturated_throughput_finite_n(p) - saturated_throughput(p)))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-4


def test_throughput_caps_offered_load():
    assert throughput(params(lh=0.1, r=0.03, m=1)) == pytest.approx(0.1)
    assert throughput(params(lh=0.6, r=1 / 30, m=1)) == pytest.approx(math.exp(-1), abs=1e-12)
    assert throughput(params(lh=0.99, r=0.2, m=BATCH_INF)) == pytest.approx(0.99)


# ---------------------------------------------------------------------------
# Stable region
# ---------------------------------------------------------------------------

class TestStableRegion:
    def test_golden_single_packet(self):
        region = stable_region(30, 0.3, 1)
        assert region.lo == pytest.approx(0.0163, abs=5e-4)
        assert region.hi == pytest.approx(0.0594, abs=5e-4)

    def test_golden_two_packet(self):
        region = stable_region(30, 0.3, 2)
        assert region.lo == pytest.approx(0.0073, abs=5e-4)
        assert region.hi == pytest.approx(0.0915, abs=5e-4)

    def test_empty_beyond_cap(self):
        assert stable_region(30, 0.6, 2).empty
        # cap is exactly m / (m + e - 1)
        cap = 2 / (2 + math.e - 1)
        assert not stable_region(30, cap - 1e-9, 2).empty
        assert stable_region(30, cap + 1e-9, 2).empty

    def test_infinite_batch_whole_interval(self):
        region = stable_region(30, 0.95, BATCH_INF)
        assert region.whole_unit_interval
        assert region.contains(0.999) and region.contains(1e-9)

    def test_widens_with_batch_size(self):
        r1 = stable_region(30, 0.3, 1)
        r2 = stable_region(30, 0.3, 2)
        r5 = stable_region(30, 0.3, 5)
        assert r2.lo < r1.lo and r2.hi > r1.hi
        assert r5.lo < r2.lo and r5.hi > r2.hi

    def test_boundary_carries_offered_load(self):
        # saturated throughput at r = lo equals the offered load
        for (n, lh, m) in [(30, 0.3, 1), (30, 0.3, 2), (50, 0.1, 3), (40, 0.45, 5)]:
            region = stable_region(n, lh, m)
            sat = saturated_throughput(SystemParams(n=n, lambda_hat=lh, r=region.lo, m=m))
            assert sat == pytest.approx(lh, abs=1e-9)


# ---------------------------------------------------------------------------
# Attempt-rate fixed point
# ---------------------------------------------------------------------------

class TestAttemptRate:
    def test_single_packet_root_is_lambert(self):
        expected = -analytic.lambert_w0(-0.3)
        for r in (0.017, 0.03, 0.05, 0.059):
            sol = solve_attempt_rate(params(r=r, m=1))
            assert sol.g == pytest.approx(expected, rel=1e-9)

    def test_two_packet_golden(self, oracle):
        # bisection oracle on the same balance, independent solver path
        def balance(g):
            x = g / 0.9
            return 1 + x - (0.3 / 0.7) * (1 / (g * math.exp(-g)) - 1)

        expected = oracle.bisect(balance, 1e-6, 0.6)
        sol = solve_attempt_rate(params(r=0.03, m=2))
        assert sol.g == pytest.approx(expected, rel=1e-10)
        assert sol.all_roots == (pytest.approx(expected, rel=1e-9),)

    def test_infinite_batch_oracle(self, oracle):
        def balance(g):
            return 1 / (1 - g / 0.9) - (0.3 / 0.7) * (1 / (g * math.exp(-g)) - 1)

        expected = oracle.bisect(balance, 1e-6, 0.6)
        sol = solve_attempt_rate(params(r=0.03, m=BATCH_INF))
        assert sol.g == pytest.approx(expected, rel=1e-10)
        # uniqueness: sign scan over a fine grid finds a single crossing
        grid = np.linspace(1e-6, 0.9 - 1e-9, 10_000)
        vals = np.array([balance(g) for g in grid])
        assert int((np.sign(vals[:-1]) != np.sign(vals[1:])).sum()) == 1

    def test_residual_tolerance(self):
        rng = np.random.default_rng(99)
        checked = 0
        while checked < 40:
            n = int(rng.integers(10, 80))
            m = int(rng.integers(1, 8))
            lh = float(rng.uniform(0.05, min(0.9, m / (m + math.e - 1) - 0.02)))
            region = stable_region(n, lh, m)
            r = float(rng.uniform(region.lo * 1.05, region.hi * 0.95))
            sol = solve_attempt_rate(SystemParams(n=n, lambda_hat=lh, r=r, m=m))
            assert abs(sol.residual) <= 1e-10
            assert 0 < sol.g < n * r
            checked += 1

    def test_bracket_encloses_selected_root(self):
        sol = solve_attempt_rate(params(r=0.03, m=2))
        lo, hi = sol.bracket
        assert lo <= sol.g <= hi
        assert hi - lo < 1e-9

    def test_no_root_when_region_empty(self):
        with pytest.raises(NoStableRoot):
            solve_attempt_rate(params(lh=0.6, r=0.03, m=2))

    def test_no_root_outside_region(self):
        with pytest.raises(NoStableRoot):
            solve_attempt_rate(params(r=0.005, m=1))
        with pytest.raises(NoStableRoot):
            solve_attempt_rate(params(r=0.2, m=1))


def test_mean_busy_period_values():
    # at the single-packet operating point g e^-g = 0.3, so the busy
    # period collapses to one slot
    g = -analytic.lambert_w0(-0.3)
    assert mean_busy_period(0.3, g) == pytest.approx(1.0, rel=1e-9)
    assert mean_busy_period(0.5, 1.0) == pytest.approx(math.e - 1, rel=1e-12)
    assert mean_busy_period(1e-9, 0.5) < 1e-6
    with pytest.raises(ValueError):
        mean_busy_period(0.3, 0.0)


# ---------------------------------------------------------------------------
# Queue laws
# ---------------------------------------------------------------------------

def brute_force_factorial2(x, m, tol=1e-12):
    """Direct summation of sum min(k,m)(min(k,m)-1) (1-x) x^(k-1)."""
    total, k = 0.0, 1
    while True:
        qk = (1 - x) * x ** (k - 1)
        b = min(k, m)
        total += b * (b - 1) * qk
        if k > m and qk * m * m < tol:
            break
        if k > 10_000_000:
            break
        k += 1
    return total


class TestBusyFactorial2:
    def test_single_packet_is_zero(self):
        for x in (0.1, 0.5, 0.9):
            assert busy_second_factorial_moment(x, 1) == 0.0

    def test_worked_example(self):
        # x = 0.5, m = 3: 2 q2 + 6 (q3 + q4 + ...) = 0.5 + 1.5
        assert busy_second_factorial_moment(0.5, 3) == pytest.approx(2.0, abs=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            x = float(rng.uniform(0.02, 0.95))
            m = int(rng.integers(1, 40))
            assert busy_second_factorial_moment(x, m) == pytest.approx(
                brute_force_factorial2(x, m), abs=1e-9
            )

    def test_infinite_batch_limit(self):
        x = 0.6
        exact = busy_second_factorial_moment(x, BATCH_INF)
        assert exact == pytest.approx(2 * x / (1 - x) ** 2, rel=1e-12)
        assert busy_second_factorial_moment(x, 4000) == pytest.approx(exact, rel=1e-9)


class TestQueueLaws:
    def laws(self, p):
        return queue_laws(p, solve_attempt_rate(p).g)

    def test_alpha_definition(self):
        p = params(r=0.03, m=2)
        sol = solve_attempt_rate(p)
        laws = self.laws(p)
        assert laws.alpha == pytest.approx(1 - sol.g / (30 * 0.03), rel=1e-12)

    def test_qk_normalizes(self):
        laws = self.laws(params(r=0.03, m=2))
        total = sum(laws.qk(k) for k in range(1, 2000))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_y0_offset(self):
        p = params(r=0.03, m=2)
        laws = self.laws(p)
        assert laws.y0_mean == pytest.approx(1 / p.lam + laws.y1_mean, rel=1e-12)

    def test_m1_busy_moments(self):
        laws = self.laws(params(r=0.03, m=1))
        assert laws.mean_busy == pytest.approx(1.0, rel=1e-9)
        assert laws.busy_factorial2 == 0.0

    def test_beta_second_form_matches_first(self):
        # first displayed form: beta = p_s / (p_s + lam p_c + lam Bbar p_w)
        for (r, m) in [(0.03, 1), (0.03, 2), (0.05, 5), (0.03, BATCH_INF)]:
            p = params(r=r, m=m)
            g = solve_attempt_rate(p).g
            laws = queue_laws(p, g)
            p_s = r * math.exp(-g)
            p_w = (1 - r) * g * math.exp(-g)
            p_c = 1 - p_s - p_w
            first = p_s / (p_s + p.lam * p_c + p.lam * laws.mean_busy * p_w)
            assert laws.beta == pytest.approx(first, rel=1e-9)
            # and the mean vacation is the geometric mean-count over lam
            assert laws.y1_mean == pytest.approx((1 - laws.beta) / (p.lam * laws.beta), rel=1e-9)

    def test_p0_exact_approaches_large_n_form(self):
        # with x and m fixed, the exact empty-buffer probability approaches
        # 1 - x^m as the per-node arrival rate vanishes
        x, m = 0.4, 3
        gaps = []
        for n in (10, 100, 1000, 10000):
            p = SystemParams(n=n, lambda_hat=0.3, r=0.01, m=m)
            laws = queue_laws(p, x * n * 0.01)
            gaps.append(abs(laws.p0_exact - laws.p0))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert laws.p0 == pytest.approx(1 - x ** m, rel=1e-12)

    def test_l0_no_arrival_probability(self):
        # brute force: busy length law b_j = q_j (j < m), tail at m
        p = params(r=0.03, m=3)
        g = solve_attempt_rate(p).g
        laws = queue_laws(p, g)
        x = g / (30 * 0.03)
        alpha = 1 - x
        brute = sum(alpha * x ** (j - 1) * (1 - p.lam) ** j for j in range(1, 3))
        brute += x ** 2 * (1 - p.lam) ** 3
        assert laws.l0 == pytest.approx(brute, rel=1e-12)

    def test_rejects_degenerate_rate(self):
        p = params(r=0.03, m=2)
        with pytest.raises(ValueError):
            queue_laws(p, 0.9)
        with pytest.raises(ValueError):
            queue_laws(p, 0.0)


# ---------------------------------------------------------------------------
# Waiting time
# ---------------------------------------------------------------------------

class TestWaitingTime:
    def test_golden_single_packet(self):
        w = mean_waiting_time(params(r=0.03, m=1))
        assert w.total_wait == pytest.approx(117.0, abs=1.0)

    def test_golden_two_packet(self):
        w = mean_waiting_time(params(r=0.03, m=2))
        assert w.total_wait == pytest.approx(57.5, abs=0.5)

    def test_decomposition_sums(self):
        for m in (1, 2, 5, BATCH_INF):
            w = mean_waiting_time(params(r=0.03, m=m))
            assert w.total_wait == pytest.approx(
                w.residual_vacation + w.queue_component + w.complete_vacations, rel=1e-9
            )

    def test_xi_probabilities_sum(self):
        p = params(r=0.03, m=2)
        w = mean_waiting_time(p)
        assert w.prob_xi0 + w.prob_xi1 == pytest.approx(1 - p.lam, rel=1e-12)
        assert 0 <= w.prob_xi0 <= 1 and 0 <= w.prob_xi1 <= 1

    def test_queue_component_is_littles_law(self):
        w = mean_waiting_time(params(r=0.03, m=2))
        assert w.queue_component == pytest.approx(0.01 * w.total_wait, rel=1e-12)

    def test_unbounded_below_region(self):
        with pytest.raises(UnboundedDelay):
            mean_waiting_time(params(r=0.016, m=1))

    def test_matches_classical_at_m1(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 100:
            n = int(rng.integers(5, 200))
            lh = float(rng.uniform(0.02, 0.36))
            region = stable_region(n, lh, 1)
            if region.empty:
                continue
            r = float(rng.uniform(region.lo * 1.01, region.hi * 0.999))
            p = SystemParams(n=n, lambda_hat=lh, r=r, m=1)
            general = mean_waiting_time(p).total_wait
            classical = mean_waiting_time_classical(p)
            assert general == pytest.approx(classical, rel=1e-9)
            checked += 1

    def test_classical_open_lower_endpoint(self):
        region = stable_region(30, 0.3, 1)
        with pytest.raises(UnboundedDelay):
            mean_waiting_time_classical(params(r=region.lo, m=1))
        # finite just inside, and at the upper endpoint
        assert mean_waiting_time_classical(params(r=region.lo * 1.001, m=1)) > 1000
        assert mean_waiting_time_classical(params(r=region.hi, m=1)) > 0

    def test_classical_requires_m1(self):
        with pytest.raises(ValueError):
            mean_waiting_time_classical(params(r=0.03, m=2))


class TestBatchInfWaiting:
    def test_requires_infinite_batch(self):
        with pytest.raises(ValueError):
            mean_waiting_time_batch_inf(params(r=0.03, m=2))

    def test_bounded_across_unit_interval(self):
        for r in (0.001, 0.01, 0.1, 0.5, 0.9):
            p = params(r=r, m=BATCH_INF)
            assert math.isfinite(mean_waiting_time_batch_inf(p))
            assert math.isfinite(mean_waiting_time_batch_inf(p, finite_n_correction=True))

    def test_variants_agree_at_small_r(self):
        p = params(r=0.01, m=BATCH_INF)
        plain = mean_waiting_time_batch_inf(p)
        corrected = mean_waiting_time_batch_inf(p, finite_n_correction=True)
        assert abs(corrected - plain) / plain < 0.02

    def test_heavy_contention_order_of_magnitude(self):
        p = params(r=0.3, m=BATCH_INF)
        assert mean_waiting_time_batch_inf(p) > 1e4
        assert mean_waiting_time_batch_inf(p, finite_n_correction=True) > 1e4

    def test_limit_consistency_with_general_form(self):
        # at large n the general result evaluated at a huge finite batch
        # matches the closed unbounded-batch form
        p_large = SystemParams(n=10**6, lambda_hat=0.3, r=3e-6, m=float(10**6))
        general = mean_waiting_time(p_large).total_wait
        closed = mean_waiting_time_batch_inf(
            SystemParams(n=10**6, lambda_hat=0.3, r=3e-6, m=BATCH_INF)
        )
        assert general == pytest.approx(closed, rel=1e-3)
