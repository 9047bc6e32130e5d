"""Kernel series against independent classical Bessel oracles."""

import math

import numpy as np
import pytest

from robin_wander.radial import (
    KernelError,
    RadialKernelParams,
    kernel_P,
    kernel_P_array,
    kernel_P_info,
    kernel_PQ,
    kernel_Q,
)


# ---------------------------------------------------------------------------
# independent oracles: classical series for J0, J1 and their derivatives,
# written directly from the textbook definitions (no shared code path)

def j0_series(x: float) -> float:
    total, term = 0.0, 1.0
    for m in range(1, 200):
        total += term
        term *= -(x * x / 4.0) / (m * m)
        if abs(term) < 1e-18:
            break
    return total


def j1_series(x: float) -> float:
    total, term = 0.0, x / 2.0
    for m in range(1, 200):
        total += term
        term *= -(x * x / 4.0) / (m * (m + 1))
        if abs(term) < 1e-18:
            break
    return total


def j1_prime(x: float, h: float = 1e-6) -> float:
    return (j1_series(x + h) - j1_series(x - h)) / (2.0 * h)


def bisect(f, a, b, n=200):
    fa, fb = f(a), f(b)
    assert fa * fb < 0
    for _ in range(n):
        m = 0.5 * (a + b)
        if fa * f(m) <= 0:
            b = m
        else:
            a, fa = m, f(m)
    return 0.5 * (a + b)


# frozen values computed with the oracles above (squares of the first
# positive zeros of J0, J0' = -J1, and J1')
J01_SQ = 5.783185962946785
J11_SQ = 14.681970642123893
JP11_SQ = 3.389957716671888


def test_oracle_roots_match_frozen_values():
    assert bisect(j0_series, 2.0, 3.0) ** 2 == pytest.approx(J01_SQ, rel=1e-12)
    assert bisect(j1_series, 3.0, 4.5) ** 2 == pytest.approx(J11_SQ, rel=1e-12)
    assert bisect(j1_prime, 1.0, 3.0) ** 2 == pytest.approx(JP11_SQ, rel=1e-6)


# ---------------------------------------------------------------------------

def test_P_at_zero_is_one():
    for w in (0.0, 1.0, 0.5j, 2.0 + 0j):
        assert kernel_P(0.0, RadialKernelParams(order=w)) == 1.0 + 0j


def test_Q_at_zero_is_order():
    for w in (0.7j, 1.0, 3.0):
        assert kernel_Q(0.0, RadialKernelParams(order=w)) == complex(w)


def test_P_order_zero_equals_J0():
    p = RadialKernelParams(order=0.0)
    for zeta in (0.3, 1.0, 5.0, 20.0, 100.0):
        expect = j0_series(math.sqrt(zeta))
        # absolute accuracy degrades with the alternating-series swing
        swing = math.exp(2.0 * math.sqrt(zeta)) / (4.0 * math.pi * math.sqrt(max(zeta, 1.0)))
        assert kernel_P(zeta, p).real == pytest.approx(expect, abs=1e-13 * max(1.0, swing))
        assert kernel_P(zeta, p).imag == 0.0


def test_first_roots_of_P_and_Q_order_zero():
    p = RadialKernelParams(order=0.0)
    root_P = bisect(lambda z: kernel_P(z, p).real, 4.0, 9.0)
    assert root_P == pytest.approx(J01_SQ, rel=1e-12)
    # first positive root of Q(.;0): Q = 2 zeta P' and d/dx J0 = -J1, so the
    # root sits at the square of the first J1 zero (not at the first J1' zero)
    root_Q = bisect(lambda z: kernel_Q(z, p).real, 10.0, 20.0)
    assert root_Q == pytest.approx(J11_SQ, rel=1e-12)


def test_first_root_of_Q_order_one_is_jp11_squared():
    p = RadialKernelParams(order=1.0)
    root = bisect(lambda z: kernel_Q(z, p).real, 1.0, 6.0)
    assert root == pytest.approx(JP11_SQ, rel=1e-12)
    # cross-check against the independent J1' oracle
    assert j1_prime(math.sqrt(root)) == pytest.approx(0.0, abs=1e-7)


def fd_ode_residual(w: complex, lam: float, r: float) -> float:
    """Fourth-order finite differences of f(r) = r^w P(lam r^2) in the ODE
    f'' + f'/r + (lam - w^2/r^2) f = 0."""
    p = RadialKernelParams(order=w)

    def f(rr: float) -> complex:
        return rr ** w * kernel_P(lam * rr * rr, p)

    h = 1e-3 * r
    pts = [f(r + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (pts[0] - 8 * pts[1] + 8 * pts[3] - pts[4]) / (12 * h)
    d2 = (-pts[0] + 16 * pts[1] - 30 * pts[2] + 16 * pts[3] - pts[4]) / (12 * h * h)
    resid = d2 + d1 / r + (lam - w * w / (r * r)) * pts[2]
    scale = abs(d2) + abs(d1 / r) + abs(lam * pts[2]) + 1.0
    return abs(resid) / scale


def test_ode_residual_imaginary_order():
    for r in (0.1, 0.5, 1.0):
        assert fd_ode_residual(0.5j, 3.0, r) <= 1e-9


def test_derivative_identity_Q():
    # numerical derivative of r^w P(lam r^2) at r = 1 times r equals Q(lam)
    w, lam = 0.7j, -2.0
    p = RadialKernelParams(order=w)

    def f(rr: float) -> complex:
        return rr ** w * kernel_P(lam * rr * rr, p)

    h = 1e-6
    d1 = (f(1.0 - 2 * h) - 8 * f(1.0 - h) + 8 * f(1.0 + h) - f(1.0 + 2 * h)) / (12 * h)
    assert d1 == pytest.approx(kernel_Q(lam, p), abs=1e-9)


def test_conjugation_symmetry():
    rng = np.random.default_rng(7)
    for zeta in rng.uniform(-80.0, 80.0, size=24):
        a = kernel_P(zeta, RadialKernelParams(order=1.3j))
        b = kernel_P(zeta, RadialKernelParams(order=-1.3j))
        assert a == pytest.approx(b.conjugate(), rel=1e-13)


def test_entirety_local_lipschitz():
    # smoothness probe: |P(zeta + d) - P(zeta)| <= |d| sup |P'| on [zeta, zeta+d]
    p = RadialKernelParams(order=1j)
    for zeta in np.linspace(-100.0, 100.0, 21):
        d = 1e-3
        a, b = kernel_P(zeta, p), kernel_P(zeta + d, p)
        _, q0 = kernel_PQ(zeta, p)
        # |P'| from Q = wP + 2 zeta P' away from 0, else series bound
        if abs(zeta) > 1e-6:
            sup_dp = abs((q0 - 1j * a) / (2 * zeta)) + 1.0
        else:
            sup_dp = 1.0
        assert abs(b - a) <= d * sup_dp


def test_recurrence_consistency():
    # c_m * 4m(m+w) + c_{m-1} = 0 up to the rounding of one complex division
    w = 0.9j
    c = 1.0 + 0j
    for m in range(1, 40):
        denom = 4.0 * m * (m + w)
        c_next = -c / denom
        assert abs(c_next * denom + c) <= 4e-16 * abs(c)
        c = c_next


def test_domain_guard_and_param_validation():
    with pytest.raises(KernelError):
        kernel_P(5000.0, RadialKernelParams(order=0.0))
    with pytest.raises(KernelError):
        RadialKernelParams(order=-2.0)
    with pytest.raises(KernelError):
        RadialKernelParams(order=1j, term_tolerance=1e-3)


def test_precision_loss_flag_large_positive_zeta():
    # deep in the alternating regime the cancellation flag must fire ...
    info = kernel_P_info(3000.0, RadialKernelParams(order=0.0))
    assert info.terms < 400
    assert info.precision_loss
    # ... and must stay quiet where the series is healthy
    assert not kernel_P_info(20.0, RadialKernelParams(order=0.0)).precision_loss
    assert not kernel_P_info(-200.0, RadialKernelParams(order=1j)).precision_loss


def test_vectorized_matches_scalar():
    p = RadialKernelParams(order=1j)
    zs = np.linspace(-30.0, 30.0, 13)
    vec = kernel_P_array(zs, p)
    for z, v in zip(zs, vec):
        assert v == pytest.approx(kernel_P(float(z), p), rel=1e-13)


def test_debug_printer():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "robin_wander.radial", "0.0", "1j"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "P=(1+0j)" in proc.stdout and "Q=1j" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "robin_wander.radial"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
