"""Real branches of the Lambert W function.

W(x) solves w * exp(w) = x.  For x in (-1/e, 0) there are two real
solutions: the principal branch W0 (w >= -1) and the lower branch W-1
(w <= -1).  Both branches meet at the branch point x = -1/e, w = -1.

The solver uses a piecewise initial guess (branch-point series, small-x
series, or log asymptotics) refined by Halley iteration.  A bisection
fallback guarantees convergence when the iteration stalls, which matters
close to the branch point where the derivative of w * exp(w) vanishes.
"""

from __future__ import annotations

import math

__all__ = ["lambert_w0", "lambert_wm1", "BRANCH_POINT"]

#: Branch point of the real Lambert W function, -1/e.
BRANCH_POINT = -math.exp(-1.0)

# Absolute slack accepted below the branch point before raising; absorbs
# floating-point slop in arguments computed as -x/(M*(1-x)+x).
_CLAMP_TOL = 1e-15

_RESIDUAL_TOL = 1e-12
_MAX_HALLEY = 60


def _residual(w: float, x: float) -> float:
    return w * math.exp(w) - x


def _halley_step(w: float, x: float) -> float:
    # Halley iteration for f(w) = w e^w - x.
    ew = math.exp(w)
    f = w * ew - x
    wp1 = w + 1.0
    denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
    if denom == 0.0 or not math.isfinite(denom):
        return w
    return w - f / denom


def _bisect(x: float, lo: float, hi: float) -> float:
    flo = _residual(lo, x)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _residual(mid, x)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= 4.0 * math.ulp(max(abs(lo), abs(hi))):
            break
    return 0.5 * (lo + hi)


def _refine(w: float, x: float, lo: float, hi: float) -> float:
    for _ in range(_MAX_HALLEY):
        if abs(_residual(w, x)) <= 0.25 * _RESIDUAL_TOL:
            return w
        nxt = _halley_step(w, x)
        if not (lo <= nxt <= hi) or not math.isfinite(nxt):
            break
        if nxt == w:
            return w
        w = nxt
    if abs(_residual(w, x)) <= _RESIDUAL_TOL:
        return w
    return _bisect(x, lo, hi)


def lambert_w0(x: float) -> float:
    """Principal branch W0, defined for x >= -1/e; returns w >= -1.

    Raises ValueError if x is more than 1e-15 below the branch point;
    arguments within that slack are clamped onto the branch point.
    """
    if math.isnan(x):
        raise ValueError("lambert_w0: argument is NaN")
    if x < BRANCH_POINT:
        if x < BRANCH_POINT - _CLAMP_TOL:
            raise ValueError(f"lambert_w0: {x!r} below the branch point -1/e")
        x = BRANCH_POINT
    if x == 0.0:
        return 0.0
    if x == BRANCH_POINT:
        return -1.0

    # Initial guess.
    if x < BRANCH_POINT + 0.04:
        # Series around the branch point in p = sqrt(2 (e x + 1)).
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 1.0:
        # Pade-like small-argument guess; adequate to start Halley.
        w = x * (1.0 - x + 1.5 * x * x) if abs(x) < 0.2 else math.log1p(x)
    else:
        lx = math.log(x)
        llx = math.log(lx) if lx > 0.0 else 0.0
        w = lx - llx + (llx / lx if lx > 0.0 else 0.0)

    hi = max(1.0, math.log(x) + 1.0) if x > 0.0 else 0.0
    return _refine(w, x, -1.0, hi)


def lambert_wm1(x: float) -> float:
    """Lower branch W-1, defined for -1/e <= x < 0; returns w <= -1.

    Raises ValueError for x >= 0 or x more than 1e-15 below -1/e.
    """
    if math.isnan(x):
        raise ValueError("lambert_wm1: argument is NaN")
    if x >= 0.0:
        raise ValueError(f"lambert_wm1: {x!r} outside the branch domain [-1/e, 0)")
    if x < BRANCH_POINT:
        if x < BRANCH_POINT - _CLAMP_TOL:
            raise ValueError(f"lambert_wm1: {x!r} below the branch point -1/e")
        x = BRANCH_POINT
    if x == BRANCH_POINT:
        return -1.0

    if x < BRANCH_POINT + 0.04:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
    else:
        # w ~ log(-x) - log(-log(-x)) as x -> 0-.
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1

    # Bracket: w e^w is increasing on (-inf, -1] toward -1/e, so the root
    # lies between some sufficiently negative lo and -1.
    lo = w - 2.0
    while _residual(lo, x) < 0.0:
        lo = 2.0 * lo - 1.0
        if lo < -750.0:
            break
    return _refine(w, x, lo, -1.0)
