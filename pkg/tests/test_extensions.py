"""Extension spectra, reflection phases, and the derivative identity.

Independent oracle: the mode-0 radial equation in the log variable
t = ln r reads u'' + (lam e^{2t} + b0^2) u = 0 and is integrated by an
adaptive Runge-Kutta shoot from the r -> 0 asymptotics, entirely apart
from the power-series kernel.
"""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from robin_wander.extensions import (
    ExtensionError,
    ExtensionOracle,
    SingularWave,
    calibrate_c_norm,
    derivative_check,
    extension_eigenvalues,
    flux_symplectic,
    reflection_theta,
    secular_mode0,
    singular_amplitude,
    singular_basis,
    track_mode0_root,
    uncalibrated_c_norm,
)
from robin_wander.transverse import bisect_root

TWO_PI = 2.0 * math.pi


def shoot_neumann_deriv(lam: float, theta: float, b0: float = 1.0, t0: float = -16.0) -> float:
    """du/dt at r = 1 for the solution matching Re[e^{i theta/2} r^{i b0}] near 0."""
    u0 = math.cos(theta / 2.0 + b0 * t0)
    v0 = -b0 * math.sin(theta / 2.0 + b0 * t0)
    sol = solve_ivp(lambda t, y: [y[1], -(lam * math.exp(2.0 * t) + b0 * b0) * y[0]],
                    [t0, 0.0], [u0, v0], rtol=1e-11, atol=1e-13, method="DOP853")
    return float(sol.y[1][-1])


def test_calibrated_c_norm_value():
    # (2 sinh pi)^{-1/2} for b0 = 1
    c = calibrate_c_norm(1.0)
    assert c == pytest.approx(1.0 / math.sqrt(2.0 * math.sinh(math.pi)), rel=1e-14)
    assert c == pytest.approx(0.20807, abs=5e-5)
    # monotone decreasing toward e^{-pi b0/2}
    b = np.array([1.0, 2.0, 4.0, 8.0])
    cs = np.array([calibrate_c_norm(x) for x in b])
    assert np.all(np.diff(cs) < 0)
    assert cs[-1] == pytest.approx(math.exp(-math.pi * 8.0 / 2.0), rel=1e-5)


def test_uncalibrated_normalization_is_not_flux_unimodular():
    b0 = 1.0
    from robin_wander.extensions import SingularBasis

    raw = SingularBasis(b0=b0, c_norm=uncalibrated_c_norm(b0))
    f = flux_symplectic(SingularWave.splus(), SingularWave.splus(), raw, 0.5)
    assert abs(abs(f) - 1.0) > 0.1


def test_flux_identities():
    basis = singular_basis(1.0)
    splus, sminus = SingularWave.splus(), SingularWave.sminus()
    # conj(s-) = s+ makes the cross integrand identically zero
    assert abs(flux_symplectic(splus, sminus, basis, 0.5)) <= 1e-13
    vals = [flux_symplectic(splus, splus, basis, r) for r in (0.3, 0.9)]
    assert abs(vals[0] - vals[1]) <= 1e-12
    assert abs(abs(vals[0]) - 1.0) <= 1e-10
    # the self-flux is purely imaginary, +i with the arc orientation used here
    assert vals[0] == pytest.approx(1j, abs=1e-12)
    assert flux_symplectic(sminus, sminus, basis, 0.5) == pytest.approx(-1j, abs=1e-12)


def test_flux_quadrature_resolution_independent():
    basis = singular_basis(0.8)
    a = flux_symplectic(SingularWave.splus(), SingularWave.splus(), basis, 0.4, quadrature_n=64)
    b = flux_symplectic(SingularWave.splus(), SingularWave.splus(), basis, 0.4, quadrature_n=128)
    assert a == pytest.approx(b, abs=1e-12)


def test_secular_closed_forms_at_zero_energy():
    # G(0, 0, R=1) = Re[i b0] = 0, so lambda = 0 is an eigenvalue of theta = 0
    assert secular_mode0(0.0, 0.0, 1.0, 1.0) == 0.0
    # general closed form at lam = 0: -b0 sin(b0 ln R + theta/2)
    for theta, R, b0 in ((0.7, 1.0, 1.0), (2.2, 0.5, 1.3), (5.0, 2.0, 0.6)):
        expect = -b0 * math.sin(b0 * math.log(R) + theta / 2.0)
        assert secular_mode0(0.0, theta, R, b0) == pytest.approx(expect, rel=1e-13, abs=1e-15)


def test_secular_reality_random_samples():
    rng = np.random.default_rng(3)
    for _ in range(50):
        lam = rng.uniform(-40.0, 30.0)
        th = rng.uniform(0.0, TWO_PI)
        val = secular_mode0(lam, th, 1.0, 1.0)
        assert isinstance(val, float)


def test_extension_window_contains_zero():
    spec = extension_eigenvalues(0.0, (-0.1, 0.1), 1.0, 1.0)
    assert any(r.family == "mode0" and abs(r.value) < 1e-12 for r in spec.records)


def test_extension_eigenvalues_match_ode_shooting():
    spec = extension_eigenvalues(0.3, (-5.0, 5.0), 1.0, 1.0, k_angular_max=1)
    mode0 = [r.value for r in spec.records if r.family == "mode0"]
    assert mode0
    for lam in mode0:
        # independent shoot: du/dt(0) must cross zero at the eigenvalue
        assert abs(shoot_neumann_deriv(lam, 0.3)) < 5e-9 or \
            shoot_neumann_deriv(lam - 1e-7, 0.3) * shoot_neumann_deriv(lam + 1e-7, 0.3) < 0


def test_regular_family_first_root():
    spec = extension_eigenvalues(0.0, (0.5, 5.0), 1.0, 1.0, k_angular_max=1)
    k1 = [r.value for r in spec.records if r.family == "k1"]
    assert k1[0] == pytest.approx(3.389957716671888, rel=1e-11)


def test_branch_monotone_decreasing():
    # same branch tracked at theta and theta + 0.1 moves down
    R, b0 = 1.0, 1.0
    for theta in (0.2, 1.5, 3.3, 5.0):
        lam = min(ExtensionOracle(b0, R, (-8.0, 4.0)).mode0_eigenvalues(theta), key=abs)
        lam_next = track_mode0_root(theta + 0.1, lam, R, b0, bracket=0.4)
        assert lam_next < lam


def test_branch_strictly_decreasing_at_fine_resolution():
    # one full branch swept over [0, 2pi) at theta step 1e-2
    R, b0 = 1.0, 1.0
    lam = min(ExtensionOracle(b0, R, (-8.0, 4.0)).mode0_eigenvalues(0.0), key=abs)
    h = 1e-2
    prev = lam
    for i in range(1, 629):
        nxt = track_mode0_root(i * h, prev, R, b0, bracket=0.08)
        assert nxt < prev
        prev = nxt
    # after a full revolution the branch lands on its lower neighbor
    assert prev < lam


def test_periodicity_in_theta():
    a = extension_eigenvalues(1.0, (-6.0, 6.0), 1.0, 1.0)
    b = extension_eigenvalues(1.0 + TWO_PI, (-6.0, 6.0), 1.0, 1.0)
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)


def test_reflection_at_zero_energy():
    data = reflection_theta(0.0, 1.0, 1.0)
    assert data.theta_lambda == pytest.approx(0.0, abs=1e-14)
    assert not data.degenerate


def test_reflection_unimodular_on_sample():
    for lam in np.linspace(-20.0, 20.0, 41):
        data = reflection_theta(float(lam), 1.0, 1.0)
        assert abs(cmath.exp(1j * data.theta_lambda)) == pytest.approx(1.0, abs=1e-15)
        assert abs(data.c_in) == pytest.approx(abs(data.c_out), abs=1e-15)
        assert not data.degenerate


def test_reflection_extension_consistency():
    spec = extension_eigenvalues(2.0, (-20.0, 20.0), 1.0, 1.0, k_angular_max=0)
    for r in spec.records:
        data = reflection_theta(r.value, 1.0, 1.0)
        d = (data.theta_lambda - 2.0) % TWO_PI
        assert min(d, TWO_PI - d) <= 1e-9


def test_reflection_phase_is_out_over_in():
    data = reflection_theta(1.7, 1.0, 1.0)
    assert cmath.phase(data.c_out / data.c_in) % TWO_PI == pytest.approx(
        data.theta_lambda, abs=1e-12)


def test_singular_amplitude_closed_form_anchor():
    # at (theta, lam) = (0, 0), R = b0 = 1: u0 = cos(ln r) and
    # int_0^1 cos(ln r)^2 r dr = 3/8 exactly, so |C0|^2 = b0/(2*3/8) = 4/3
    c2 = singular_amplitude(0.0, 0.0, 1.0, 1.0)
    assert c2 == pytest.approx(4.0 / 3.0, rel=1e-8)


def test_singular_amplitude_scale_invariance():
    lam = track_mode0_root(1.2, -1.0, 1.0, 1.0, bracket=2.0)
    a = singular_amplitude(lam, 1.2, 1.0, 1.0)
    b = singular_amplitude(lam, 1.2, 1.0, 1.0, scale=7.0)
    assert a == pytest.approx(b, rel=1e-14)


def test_singular_amplitude_rejects_non_eigenvalue():
    with pytest.raises(ExtensionError):
        singular_amplitude(0.123, 0.0, 1.0, 1.0)


def test_singular_amplitude_positive_across_theta_grid():
    oracle = ExtensionOracle(1.0, 1.0, (-8.0, 4.0))
    for theta in np.linspace(0.1, TWO_PI - 0.1, 9):
        lam = min(oracle.mode0_eigenvalues(float(theta)), key=abs)
        assert singular_amplitude(lam, float(theta), 1.0, 1.0) > 0.0


def test_derivative_identity_against_shooting_branch():
    # finite differences of the ODE-shot branch agree with -|C0|^2 too
    theta, b0 = 0.3, 1.0
    lam = track_mode0_root(theta, -0.4, 1.0, b0)
    chk = derivative_check(theta, lam, 1.0, b0)
    assert chk.fd < 0
    assert chk.rel_err <= 1e-3
    h = 1e-4
    lam_p = bisect_root(lambda l: shoot_neumann_deriv(l, theta + h), lam - 0.01, lam + 0.01)
    lam_m = bisect_root(lambda l: shoot_neumann_deriv(l, theta - h), lam - 0.01, lam + 0.01)
    fd_shoot = (lam_p - lam_m) / (2.0 * h)
    assert fd_shoot == pytest.approx(chk.fd, rel=1e-5)


def test_oracle_matches_direct_scan():
    oracle = ExtensionOracle(1.0, 1.0, (-10.0, 10.0))
    for theta in (0.0, 1.1, 4.4):
        direct = extension_eigenvalues(theta, (-10.0, 10.0), 1.0, 1.0, k_angular_max=3)
        got = oracle.eigenvalues(theta)
        assert len(got) == len(direct.records)
        for (lam, fam), rec in zip(got, direct.records):
            assert lam == pytest.approx(rec.value, abs=1e-9)
            assert fam == rec.family


def test_coverage_gap_scaling_with_resolution():
    from robin_wander.sweep import oracle_coverage

    oracle = ExtensionOracle(1.0, 1.0, (-1.0, 6.0))
    g64 = oracle_coverage(oracle, (0.0, 5.0), 64).max_gap
    g256 = oracle_coverage(oracle, (0.0, 5.0), 256).max_gap
    assert g256 <= g64 / 3.0


def test_no_degenerate_mode0_points_on_scan():
    # trapped-mode candidates (Q = 0) are reported, never raised; none are
    # expected on the scanned grid
    for lam in np.linspace(-30.0, 30.0, 121):
        assert not reflection_theta(float(lam), 1.0, 1.0).degenerate


def test_window_exceeding_kernel_domain_rejected():
    with pytest.raises(ExtensionError):
        extension_eigenvalues(0.0, (-5000.0, 5000.0), 1.0, 1.0)
