"""Shared independent oracles for the test suite.

These deliberately avoid the library's own solvers: plain interval
bisection and brute-force summation, used to freeze expected values.
"""

from __future__ import annotations

import math

import pytest


def bisect_root(f, lo: float, hi: float, iterations: int = 200) -> float:
    """Plain bisection on a sign change; independent of library solvers."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    assert flo * fhi < 0.0, f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}"
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def lambert_oracle(x: float, branch: int) -> float:
    """Bisection oracle for w e^w = x on the requested real branch."""
    f = lambda w: w * math.exp(w) - x
    if branch == 0:
        hi = 1.0 if x <= math.e else math.log(x) + 1.0
        return bisect_root(f, -1.0, hi)
    assert x < 0.0
    lo = -2.0
    while lo * math.exp(lo) - x < 0.0:
        lo *= 2.0
    return bisect_root(f, lo, -1.0)


@pytest.fixture(scope="session")
def oracle():
    class Oracle:
        bisect = staticmethod(bisect_root)
        lambertw = staticmethod(lambert_oracle)

    return Oracle
