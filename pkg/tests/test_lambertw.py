"""Lambert W branches against the bisection oracle and branch identities."""

import math

import numpy as np
import pytest

from batchaloha.lambertw import BRANCH_POINT, lambert_w0, lambert_wm1

# Frozen with the bisection oracle on w * e^w = x (see conftest.lambert_oracle).
W0_AT_M03 = -0.489402227180215
WM1_AT_M03 = -1.781337023421628
WM1_AT_M017647 = -2.7440331962912277


def test_w0_identity_cases():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(BRANCH_POINT) == pytest.approx(-1.0, abs=1e-12)


def test_wm1_branch_point():
    assert lambert_wm1(BRANCH_POINT) == pytest.approx(-1.0, abs=1e-12)


def test_frozen_values(oracle):
    assert lambert_w0(-0.3) == pytest.approx(W0_AT_M03, abs=1e-11)
    assert lambert_wm1(-0.3) == pytest.approx(WM1_AT_M03, abs=1e-11)
    assert lambert_wm1(-0.17647) == pytest.approx(WM1_AT_M017647, abs=1e-11)
    # the frozen constants themselves come from the oracle
    assert oracle.lambertw(-0.3, 0) == pytest.approx(W0_AT_M03, abs=1e-12)
    assert oracle.lambertw(-0.3, -1) == pytest.approx(WM1_AT_M03, abs=1e-12)
    assert oracle.lambertw(-0.17647, -1) == pytest.approx(WM1_AT_M017647, abs=1e-12)


def test_region_endpoint_crosschecks():
    # -W0(-0.3)/30 and -Wm1(-0.3)/30 are the known single-packet region
    # endpoints at 30 nodes, offered load 0.3.
    assert -lambert_w0(-0.3) / 30 == pytest.approx(0.0163, abs=5e-4)
    assert -lambert_wm1(-0.3) / 30 == pytest.approx(0.0594, abs=5e-4)
    assert -lambert_wm1(-0.17647) / 30 == pytest.approx(0.0915, abs=5e-4)


def test_domain_errors():
    with pytest.raises(ValueError):
        lambert_w0(BRANCH_POINT - 1e-9)
    with pytest.raises(ValueError):
        lambert_wm1(BRANCH_POINT - 1e-9)
    with pytest.raises(ValueError):
        lambert_wm1(0.0)
    with pytest.raises(ValueError):
        lambert_wm1(0.5)


def test_branch_point_clamp_slop():
    # arguments a hair below -1/e are clamped rather than rejected
    assert lambert_w0(BRANCH_POINT - 5e-16) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_wm1(BRANCH_POINT - 5e-16) == pytest.approx(-1.0, abs=1e-7)


def test_residuals_principal_branch():
    rng = np.random.default_rng(1234)
    xs = np.concatenate([
        rng.uniform(BRANCH_POINT, 0.0, 1500),
        rng.uniform(0.0, 10.0, 400),
        BRANCH_POINT + 10.0 ** rng.uniform(-14, -2, 100),
    ])
    for x in xs:
        w = lambert_w0(float(x))
        assert w >= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12


def test_residuals_lower_branch():
    rng = np.random.default_rng(4321)
    xs = np.concatenate([
        rng.uniform(BRANCH_POINT, -1e-6, 1500),
        -(10.0 ** rng.uniform(-12, -1, 400)),
        BRANCH_POINT + 10.0 ** rng.uniform(-14, -2, 100),
    ])
    for x in xs:
        w = lambert_wm1(float(x))
        assert w <= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12


def test_branch_ordering():
    rng = np.random.default_rng(7)
    for x in rng.uniform(BRANCH_POINT + 1e-12, -1e-9, 500):
        assert lambert_wm1(float(x)) < -1.0 < lambert_w0(float(x)) <= 0.0


def test_monotonicity():
    xs = np.linspace(BRANCH_POINT + 1e-9, 5.0, 400)
    w0 = [lambert_w0(float(x)) for x in xs]
    assert all(b > a for a, b in zip(w0, w0[1:]))
    xs = np.linspace(BRANCH_POINT + 1e-9, -1e-6, 400)
    wm1 = [lambert_wm1(float(x)) for x in xs]
    assert all(b < a for a, b in zip(wm1, wm1[1:]))
