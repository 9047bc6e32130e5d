"""Angular spectrum tests, with a finite-difference discretization oracle."""

import math

import numpy as np
import pytest

from robin_wander.transverse import (
    TransverseError,
    boundary_residual,
    ode_residual,
    transverse_mode_eval,
    transverse_spectrum,
)


def fd_oracle_eigs(a0: float, variant: str, n: int = 1200) -> np.ndarray:
    """Independent oracle: second-order finite differences of -g'' = mu g on
    (-pi/2, pi/2) with one-sided boundary conditions eliminated via ghost
    nodes.  Returns the real eigenvalues sorted ascending."""
    h = math.pi / (n - 1)
    phi = np.linspace(-math.pi / 2.0, math.pi / 2.0, n)
    A = np.zeros((n, n))
    for i in range(1, n - 1):
        A[i, i - 1] = A[i, i + 1] = -1.0 / h / h
        A[i, i] = 2.0 / h / h
    # BC at +pi/2: a0 g' - g = 0; at -pi/2: sign variant a0 g' - g = 0,
    # abs variant a0 g' + g = 0.  Ghost elimination with central g'.
    # g_{n} = g_{n-2} + 2h g_{n-1}/a0  (from a0 g' = g at the right end)
    A[n - 1, n - 2] = -2.0 / h / h
    A[n - 1, n - 1] = 2.0 / h / h - 2.0 / (h * a0)
    if variant == "sign":
        # a0 g' = g at the left end: g_{-1} = g_1 - 2h g_0/a0
        A[0, 1] = -2.0 / h / h
        A[0, 0] = 2.0 / h / h + 2.0 / (h * a0)
    else:
        # a0 g' = -g at the left end: g_{-1} = g_1 + 2h g_0/a0
        A[0, 1] = -2.0 / h / h
        A[0, 0] = 2.0 / h / h - 2.0 / (h * a0)
    w = np.linalg.eigvals(A)
    w = np.real(w[np.abs(np.imag(w)) < 1e-8])
    return np.sort(w)


@pytest.mark.parametrize("a0", [0.5, 1.0, 2.0])
def test_sign_variant_closed_form(a0):
    spec = transverse_spectrum(a0, "sign", 4)
    b0 = 1.0 / a0
    assert spec.eigenvalues.tolist() == [-b0 * b0, 1.0, 4.0, 9.0, 16.0]
    assert spec.negative_count == 1


def test_sign_variant_matches_fd_oracle():
    spec = transverse_spectrum(0.5, "sign", 3)
    oracle = fd_oracle_eigs(0.5, "sign")
    for mu in spec.eigenvalues:
        assert np.min(np.abs(oracle - mu)) < 5e-3 * max(1.0, abs(mu))


def test_sign_variant_mode_residuals():
    spec = transverse_spectrum(0.5, "sign", 6)
    for i in range(len(spec.modes)):
        assert boundary_residual(spec, i) <= 1e-12
        assert ode_residual(spec, i) <= 1e-10


def test_sign_mode_closed_forms():
    spec = transverse_spectrum(0.5, "sign", 2)
    # mode 0: e^{b0 phi}
    assert transverse_mode_eval(spec, 0, 0.0) == 1.0
    assert transverse_mode_eval(spec, 0, 0.3) == pytest.approx(math.exp(2.0 * 0.3))
    # even k: k a0 cos(k phi) + sin(k phi)
    k, a0 = 2, 0.5
    for phi in (0.0, 0.4, -1.1):
        expect = k * a0 * math.cos(k * phi) + math.sin(k * phi)
        assert transverse_mode_eval(spec, 2, phi) == pytest.approx(expect, abs=1e-14)
    # odd k satisfies the boundary conditions (the even-k closed form does not)
    g = lambda phi: transverse_mode_eval(spec, 1, phi)
    gp = lambda phi: transverse_mode_eval(spec, 1, phi, deriv=1)
    assert a0 * gp(math.pi / 2) - g(math.pi / 2) == pytest.approx(0.0, abs=1e-14)
    assert a0 * gp(-math.pi / 2) - g(-math.pi / 2) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("a0,expected", [(0.5, 2), (1.0, 2), (1.4, 2),
                                         (1.6, 1), (2.0, 1), (3.0, 1)])
def test_abs_variant_trichotomy(a0, expected):
    spec = transverse_spectrum(a0, "abs", 1)
    assert spec.negative_count == expected


def test_abs_variant_matches_fd_oracle():
    for a0 in (0.8, 1.0, 2.5):
        spec = transverse_spectrum(a0, "abs", 3)
        oracle = fd_oracle_eigs(a0, "abs")
        for mu in spec.eigenvalues:
            assert np.min(np.abs(oracle - mu)) < 5e-3 * max(1.0, abs(mu))
        # negative counts agree too
        assert int(np.sum(oracle < -1e-3)) == spec.negative_count


def test_abs_even_secular_value():
    # a0 = 1: the even negative eigenvalue solves beta tanh(beta pi/2) = 1
    spec = transverse_spectrum(1.0, "abs", 1)
    beta = math.sqrt(-spec.eigenvalues[0])
    assert 1.0 * beta * math.tanh(beta * math.pi / 2.0) == pytest.approx(1.0, rel=1e-11)
    assert spec.negative_count == 2


def test_abs_zero_mode_at_critical_slope():
    spec = transverse_spectrum(math.pi / 2.0, "abs", 1)
    assert 0.0 in spec.eigenvalues.tolist()
    idx = spec.eigenvalues.tolist().index(0.0)
    # mode is proportional to phi
    phis = np.array([-1.2, -0.3, 0.7, 1.5])
    vals = transverse_mode_eval(spec, idx, phis)
    ratio = vals / phis
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    assert boundary_residual(spec, idx) <= 1e-12


def test_abs_zero_mode_appears_only_at_critical_slope():
    for a0 in (math.pi / 2 - 1e-3, math.pi / 2 + 1e-3):
        spec = transverse_spectrum(a0, "abs", 1)
        assert 0.0 not in spec.eigenvalues.tolist()


def test_abs_continuity_across_critical_slope():
    # eigenvalue branches move continuously through a0 = pi/2; only the
    # negative count jumps as the odd root crosses zero
    left = transverse_spectrum(math.pi / 2 - 1e-3, "abs", 2)
    right = transverse_spectrum(math.pi / 2 + 1e-3, "abs", 2)
    # even negative branch barely moves
    assert left.eigenvalues[0] == pytest.approx(right.eigenvalues[0], abs=5e-3)
    # the odd branch sits near zero on both sides
    assert abs(left.eigenvalues[1]) < 5e-3
    assert left.negative_count == 2 and right.negative_count == 1


def test_abs_mode_residuals_and_normalization():
    spec = transverse_spectrum(1.3, "abs", 3)
    for i in range(len(spec.modes)):
        assert boundary_residual(spec, i) <= 1e-10
        assert ode_residual(spec, i) <= 1e-10
        g_left = transverse_mode_eval(spec, i, -math.pi / 2.0)
        assert g_left == pytest.approx(1.0, abs=1e-9)


def test_eigenvalues_sorted_and_simple():
    for a0, variant in ((0.5, "sign"), (1.0, "abs"), (2.0, "abs")):
        spec = transverse_spectrum(a0, variant, 5)
        assert np.all(np.diff(spec.eigenvalues) > 0)


def test_preconditions():
    with pytest.raises(TransverseError):
        transverse_spectrum(-1.0, "sign", 1)
    with pytest.raises(TransverseError):
        transverse_spectrum(1.0, "sign", 0)
    with pytest.raises(TransverseError):
        transverse_spectrum(1.0, "bogus", 1)
    spec = transverse_spectrum(1.0, "sign", 1)
    with pytest.raises(TransverseError):
        transverse_mode_eval(spec, 5, 0.0)
