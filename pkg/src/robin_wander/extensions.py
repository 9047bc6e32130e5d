"""Semi-analytic spectra of the self-adjoint extensions on the half-disk.

The boundary coefficient is the exact linear model a(s) = a0*s, so the
eigenvalue problem decouples in polar coordinates.  The angular mode
carrying the singularity has mu = -b0^2 and radial order w = i*b0; its
two bounded oscillatory radial solutions r^{+-i b0} are not of finite
energy near the origin, and the self-adjoint extensions are parametrized
by a phase theta in [0, 2pi) tying the two singular amplitudes together.

Conventions (fixed once, used artifact-wide):

* singular waves  s+- = c_norm * r^{+-i b0} e^{b0 phi}  with the flux
  calibration |psi_arc(s+, s+)| = 1, i.e. c_norm = (2 sinh(pi b0))^{-1/2};
* a mode-0 eigenfunction of the extension labelled theta is
      u0(r) = Re[e^{i theta/2} r^{i b0} P(lam r^2; i b0)],
  so its s+ coefficient is e^{i theta/2}/(2 c_norm) and the extension
  condition reads coef(s-) = e^{-i theta} coef(s+);
* the reflection phase returned for energy lam is
      theta_lambda = pi - 2 (b0 ln R + arg Q(lam R^2; i b0))  (mod 2pi),
  which makes reflection_theta(lam*) equal theta for every mode-0
  eigenvalue lam* of the theta-extension, and makes every eigenvalue
  branch strictly decreasing with lambda'(theta) = -|C0|^2.

The orientation (theta vs -theta) is the one under which the decreasing
monotonicity and the derivative identity hold with a minus sign; the
opposite choice flips both.  Only this file owns the convention.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .radial import RadialKernelParams, kernel_PQ, kernel_P_array
from .transverse import bisect_root

TWO_PI = 2.0 * math.pi

def uncalibrated_c_norm(b0: float) -> float:
    """Alternative normalizing factor 1 - e^{-2 pi b0}, reported alongside the
    calibrated one; it does not make the self-flux unimodular."""
    return 1.0 - math.exp(-2.0 * math.pi * b0)


class ExtensionError(Exception):
    pass


class TrappedModeCandidate(ExtensionError):
    """Both singular radial solutions satisfy the outer Neumann condition."""


@dataclass(frozen=True)
class SingularBasis:
    """Data (b0, c_norm, theta) defining s+-, the real combinations, and
    the in/out coefficient conventions."""

    b0: float
    c_norm: float
    theta: float = 0.0

    def __post_init__(self):
        if self.b0 <= 0.0:
            raise ExtensionError("b0 must be positive")
        if self.c_norm <= 0.0:
            raise ExtensionError("c_norm must be positive")


def singular_basis(b0: float, theta: float = 0.0) -> SingularBasis:
    return SingularBasis(b0=b0, c_norm=calibrate_c_norm(b0), theta=theta % TWO_PI)


@dataclass(frozen=True)
class SingularWave:
    """Closed-form harmonic combination c_norm (cp r^{ib0} + cm r^{-ib0}) e^{b0 phi}."""

    coef_plus: complex
    coef_minus: complex

    @staticmethod
    def splus() -> "SingularWave":
        return SingularWave(1.0, 0.0)

    @staticmethod
    def sminus() -> "SingularWave":
        return SingularWave(0.0, 1.0)

    @staticmethod
    def real_combination(gamma: float) -> "SingularWave":
        """2 Re[e^{i gamma} s+] = e^{i gamma} s+ + e^{-i gamma} s-."""
        return SingularWave(cmath.exp(1j * gamma), cmath.exp(-1j * gamma))


def _wave_values(wave: SingularWave, basis: SingularBasis, r: float, phi: np.ndarray):
    b0 = basis.b0
    rp = cmath.exp(1j * b0 * math.log(r))
    u_rad = basis.c_norm * (wave.coef_plus * rp + wave.coef_minus / rp)
    du_rad = basis.c_norm * 1j * b0 / r * (wave.coef_plus * rp - wave.coef_minus / rp)
    ang = np.exp(b0 * phi)
    return u_rad * ang, du_rad * ang


def flux_symplectic(u_wave: SingularWave, v_wave: SingularWave, basis: SingularBasis,
                    r: float, quadrature_n: int = 64) -> complex:
    """Arc integral of (d_r u * conj(v) - u * d_r conj(v)) r dphi.

    For harmonic combinations of s+- satisfying the model Robin condition
    the value is independent of r; with the calibrated c_norm the
    self-flux of s+ has magnitude 1 and the cross flux vanishes.
    """
    if r <= 0.0:
        raise ExtensionError("arc radius must be positive")
    x, w = leggauss(quadrature_n)
    phi = 0.5 * math.pi * x
    wq = 0.5 * math.pi * w
    u, du = _wave_values(u_wave, basis, r, phi)
    v, dv = _wave_values(v_wave, basis, r, phi)
    integrand = du * np.conj(v) - u * np.conj(dv)
    return complex(np.sum(wq * integrand) * r)


def calibrate_c_norm(b0: float, verify_quadrature: bool = True) -> float:
    """c_norm with |flux_symplectic(s+, s+)| = 1: (2 sinh(pi b0))^{-1/2}.

    The closed form follows from the arc integral
    int e^{2 b0 phi} dphi = sinh(pi b0)/b0, giving self-flux
    i * c_norm^2 * 2 sinh(pi b0); verified here by quadrature at two radii.
    """
    if b0 <= 0.0:
        raise ExtensionError("b0 must be positive")
    c = 1.0 / math.sqrt(2.0 * math.sinh(math.pi * b0))
    if verify_quadrature:
        basis = SingularBasis(b0=b0, c_norm=c)
        for r in (0.37, 0.81):
            f = flux_symplectic(SingularWave.splus(), SingularWave.splus(), basis, r)
            if abs(abs(f) - 1.0) > 1e-10:
                raise ExtensionError(f"flux calibration failed at r={r}: |psi|={abs(f)}")
    return c


# ---------------------------------------------------------------------------
# mode-0 secular function and spectra

def _mode0_params(b0: float) -> RadialKernelParams:
    return RadialKernelParams(order=1j * b0)


def secular_mode0(lam: float, theta: float, R: float, b0: float) -> float:
    """G(lam) = Re[e^{i theta/2} e^{i b0 ln R} Q(lam R^2; i b0)].

    Zeros in lam are the mode-0 eigenvalues of the theta-extension: a real
    eigenfunction u0(r) = Re[e^{i theta/2} r^{i b0} P(lam r^2)] must have
    vanishing radial derivative at r = R, and r u0'(r) = Re[e^{i theta/2}
    r^{i b0} Q(lam r^2)].
    """
    _, Q = kernel_PQ(lam * R * R, _mode0_params(b0))
    return (cmath.exp(1j * (0.5 * theta + b0 * math.log(R))) * Q).real


def _regular_secular(lam: float, k: int, R: float) -> float:
    _, Q = kernel_PQ(lam * R * R, RadialKernelParams(order=float(k)))
    return Q.real


@dataclass(frozen=True)
class EigenvalueRecord:
    value: float
    family: str       # "mode0" or "k<j>"
    residual: float


@dataclass(frozen=True)
class ExtensionSpectrum:
    theta: float
    R: float
    b0: float
    records: tuple[EigenvalueRecord, ...]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def family(self, name: str) -> list[EigenvalueRecord]:
        return [r for r in self.records if r.family == name]


def _scan_and_refine(f, lo: float, hi: float, step: float, rel_tol: float = 1e-12) -> list[float]:
    roots: list[float] = []
    n = max(2, int(math.ceil((hi - lo) / step)))
    xs = np.linspace(lo, hi, n + 1)
    vals = np.array([f(x) for x in xs])
    for i in range(n):
        if vals[i] == 0.0:
            roots.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(bisect_root(f, float(xs[i]), float(xs[i + 1]), rel_tol=rel_tol))
    if vals[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def regular_family_roots(k: int, window: tuple[float, float], R: float,
                         grid_step: float = 0.25) -> list[float]:
    """Roots of Q(lam R^2; k) = 0 in the window (theta-independent modes).

    k = 0 is the pure-Neumann radial family used as the FEM validation
    oracle; its trivial root at lam = 0 (constant mode) is kept only when
    the window contains 0.
    """
    lo, hi = window
    roots = _scan_and_refine(lambda lam: _regular_secular(lam, k, R), lo, hi, grid_step)
    if k == 0:
        # deflate the analytic double counting near 0: Q(z;0) = 2 z P'(z;0)
        roots = [r for r in roots if abs(r) > 1e-9] + ([0.0] if lo <= 0.0 <= hi else [])
        roots.sort()
    return roots


def extension_eigenvalues(theta: float, window: tuple[float, float], R: float, b0: float,
                          k_angular_max: int = 3, grid_step: float = 0.25) -> ExtensionSpectrum:
    """All eigenvalues of the theta-extension in the window, with family labels.

    mode-0 roots come from secular_mode0 and depend on theta; each angular
    index k = 1..k_angular_max contributes the theta-independent roots of
    Q(lam R^2; k).  Roots are refined by bisection to relative tolerance
    1e-12 and returned sorted, duplicates across families kept.
    """
    lo, hi = window
    if not (lo < hi):
        raise ExtensionError("empty window")
    if max(abs(lo), abs(hi)) * R * R > 4000.0:
        raise ExtensionError("window exceeds kernel domain")
    theta = theta % TWO_PI
    records: list[EigenvalueRecord] = []
    for lam in _scan_and_refine(lambda x: secular_mode0(x, theta, R, b0), lo, hi, grid_step):
        res = abs(secular_mode0(lam, theta, R, b0))
        records.append(EigenvalueRecord(lam, "mode0", res))
    for k in range(1, k_angular_max + 1):
        for lam in regular_family_roots(k, window, R, grid_step):
            records.append(EigenvalueRecord(lam, f"k{k}", abs(_regular_secular(lam, k, R))))
    records.sort(key=lambda rec: rec.value)
    return ExtensionSpectrum(theta=theta, R=R, b0=b0, records=tuple(records))


# ---------------------------------------------------------------------------
# reflection data

@dataclass(frozen=True)
class ScatteringData:
    """Reflection data of the mode-0 radial solution with Neumann outer condition.

    c_out is the s+ coefficient and c_in the s- coefficient of the real
    normalized solution; theta_lambda = arg(c_out / c_in) and
    |c_in| = |c_out| always (energy conservation).  `degenerate` flags the
    trapped-mode candidate Q(lam R^2) = 0 where the Neumann solution is
    not unique up to real scale.
    """

    lam: float
    c_in: complex
    c_out: complex
    theta_lambda: float
    q_magnitude: float
    degenerate: bool = False


def reflection_theta(lam: float, R: float, b0: float, basis: SingularBasis | None = None,
                     degeneracy_tol: float = 1e-12) -> ScatteringData:
    """Reflection phase of the unique-up-to-real-scale Neumann mode-0 solution.

    theta_lambda = pi - 2 (b0 ln R + arg Q(lam R^2; i b0))  reduced to [0, 2pi).
    """
    if basis is None:
        basis = singular_basis(b0)
    P, Q = kernel_PQ(lam * R * R, _mode0_params(b0))
    scale = abs(b0 * P) + abs(Q - 1j * b0 * P) + 1e-300
    qmag = abs(Q)
    if qmag < degeneracy_tol * scale:
        return ScatteringData(lam=lam, c_in=complex("nan"), c_out=complex("nan"),
                              theta_lambda=float("nan"), q_magnitude=qmag, degenerate=True)
    theta_lam = (math.pi - 2.0 * (b0 * math.log(R) + cmath.phase(Q))) % TWO_PI
    c_out = cmath.exp(0.5j * theta_lam) / (2.0 * basis.c_norm)
    return ScatteringData(lam=lam, c_in=c_out.conjugate(), c_out=c_out,
                          theta_lambda=theta_lam, q_magnitude=qmag)


# ---------------------------------------------------------------------------
# normalization and the derivative identity

def mode0_radial_profile(r: np.ndarray, lam: float, theta: float, b0: float) -> np.ndarray:
    """Unit-coefficient representation u0(r) = Re[e^{i theta/2} r^{i b0} P(lam r^2)]."""
    r = np.asarray(r, dtype=float)
    P = kernel_P_array(lam * r * r, _mode0_params(b0))
    return (np.exp(1j * (0.5 * theta + b0 * np.log(r))) * P).real


def _radial_norm_sq(lam: float, theta: float, R: float, b0: float,
                    r_quad_min: float = 1e-10, n_log: int = 4001, n_lin: int = 801) -> float:
    """int_0^R u0(r)^2 r dr via log-uniform Simpson plus a uniform tail near R.

    |u0|^2 oscillates in ln r with bounded amplitude, so the grid is
    uniform in ln r on [r_quad_min, R/2]; the outer piece [R/2, R] uses a
    uniform grid to resolve the lam r^2 oscillation.  Truncation below
    r_quad_min contributes O(r_quad_min^2) (bounded integrand, measure r dr).
    """
    from scipy.integrate import simpson

    if n_log % 2 == 0:
        n_log += 1
    if n_lin % 2 == 0:
        n_lin += 1
    t = np.linspace(math.log(r_quad_min), math.log(0.5 * R), n_log)
    r_log = np.exp(t)
    u_log = mode0_radial_profile(r_log, lam, theta, b0)
    inner = float(simpson(u_log * u_log * r_log * r_log, x=t))
    r_lin = np.linspace(0.5 * R, R, n_lin)
    u_lin = mode0_radial_profile(r_lin, lam, theta, b0)
    outer = float(simpson(u_lin * u_lin * r_lin, x=r_lin))
    return inner + outer


def singular_amplitude(lam_k: float, theta: float, R: float, b0: float,
                       basis: SingularBasis | None = None, scale: float = 1.0,
                       residual_tol: float = 1e-9) -> float:
    """|C0|^2 of the L2-normalized mode-0 eigenfunction at eigenvalue lam_k.

    The separated eigenfunction u(r, phi) = u0(r) e^{b0 phi} is normalized
    over the half-disk (angular integral sinh(pi b0)/b0 in closed form)
    and |C0|^2 = alpha^2 / (4 c_norm^2) with alpha the normalization of u0
    against the unit-coefficient representation.  With the calibrated
    c_norm this collapses to |C0|^2 = b0 / (2 int_0^R u0^2 r dr).

    `scale` multiplies the raw radial profile before normalization; the
    result is invariant (scale-invariance contract).
    """
    if basis is None:
        basis = singular_basis(b0, theta)
    g = secular_mode0(lam_k, theta, R, b0)
    gscale = abs(kernel_PQ(lam_k * R * R, _mode0_params(b0))[1]) + 1e-300
    if abs(g) > residual_tol * max(1.0, gscale):
        raise ExtensionError(f"lam={lam_k:g} is not a mode-0 eigenvalue of theta={theta:g} "
                             f"(secular residual {abs(g):.2e})")
    radial = scale * scale * _radial_norm_sq(lam_k, theta, R, b0)
    angular = math.sinh(math.pi * b0) / b0
    norm_sq = radial * angular
    alpha_sq = scale * scale / norm_sq
    return alpha_sq / (4.0 * basis.c_norm ** 2)


def track_mode0_root(theta: float, lam_guess: float, R: float, b0: float,
                     bracket: float = 0.05, rel_tol: float = 1e-13) -> float:
    """Mode-0 eigenvalue of the theta-extension nearest lam_guess."""
    f = lambda lam: secular_mode0(lam, theta, R, b0)
    delta = bracket
    for _ in range(40):
        lo, hi = lam_guess - delta, lam_guess + delta
        if f(lo) * f(hi) < 0.0:
            return bisect_root(f, lo, hi, rel_tol=rel_tol)
        delta *= 1.6
    raise ExtensionError(f"could not bracket mode-0 root near {lam_guess:g}")


@dataclass(frozen=True)
class DerivativeCheck:
    theta: float
    lam: float
    fd: float
    minus_c0_sq: float
    rel_err: float


def derivative_check(theta: float, lam_k: float, R: float, b0: float,
                     h: float = 1e-4) -> DerivativeCheck:
    """Central finite difference of the branch against -|C0|^2."""
    lam_p = track_mode0_root(theta + h, lam_k, R, b0, bracket=10.0 * h)
    lam_m = track_mode0_root(theta - h, lam_k, R, b0, bracket=10.0 * h)
    fd = (lam_p - lam_m) / (2.0 * h)
    c0sq = singular_amplitude(lam_k, theta, R, b0)
    rel = abs(fd + c0sq) / c0sq
    return DerivativeCheck(theta=theta, lam=lam_k, fd=fd, minus_c0_sq=-c0sq, rel_err=rel)


# ---------------------------------------------------------------------------
# fast oracle over theta: precomputed reflection-phase table

class ExtensionOracle:
    """Tabulated mode-0 phase for O(1)-per-theta spectra over a fixed window.

    theta_lambda(lam) is continuous and strictly decreasing; its unwrapped
    tabulation over the window inverts to the mode-0 eigenvalues of any
    extension without rescanning.  Regular-family roots are cached once.
    """

    def __init__(self, b0: float, R: float, window: tuple[float, float],
                 k_angular_max: int = 3, grid_step: float = 0.05):
        self.b0 = b0
        self.R = R
        self.window = (float(window[0]), float(window[1]))
        self.k_angular_max = k_angular_max
        lo, hi = self.window
        n = max(16, int(math.ceil((hi - lo) / grid_step)))
        self.lam_grid = np.linspace(lo, hi, n + 1)
        params = _mode0_params(b0)
        raw = np.empty_like(self.lam_grid)
        for i, lam in enumerate(self.lam_grid):
            _, Q = kernel_PQ(lam * R * R, params)
            raw[i] = math.pi - 2.0 * (b0 * math.log(R) + cmath.phase(Q))
        self.phase = np.unwrap(raw)
        if np.any(np.diff(self.phase) >= 0.0):
            raise ExtensionError("tabulated reflection phase is not strictly decreasing; "
                                 "refine grid_step")
        self.regular = {k: regular_family_roots(k, self.window, R)
                        for k in range(1, k_angular_max + 1)}

    def mode0_eigenvalues(self, theta: float, refine: bool = True) -> list[float]:
        theta = theta % TWO_PI
        ph = self.phase
        lo_n = math.ceil((theta - ph[0]) / TWO_PI)
        hi_n = math.floor((theta - ph[-1]) / TWO_PI)
        roots = []
        for nwrap in range(lo_n, hi_n + 1):
            target = theta - TWO_PI * nwrap
            idx = int(np.searchsorted(-ph, -target))
            if idx <= 0 or idx >= len(ph):
                continue
            lam0, lam1 = self.lam_grid[idx - 1], self.lam_grid[idx]
            # linear interpolation on the tabulated phase
            f0, f1 = ph[idx - 1] - target, ph[idx] - target
            lam = lam0 + (lam1 - lam0) * f0 / (f0 - f1)
            if refine:
                f = lambda x: secular_mode0(x, theta, self.R, self.b0)
                wlo, whi = lam0 - 1e-12, lam1 + 1e-12
                if f(wlo) * f(whi) < 0.0:
                    lam = bisect_root(f, wlo, whi, rel_tol=1e-12)
            roots.append(float(lam))
        return sorted(roots)

    def eigenvalues(self, theta: float, refine: bool = True) -> list[tuple[float, str]]:
        out = [(lam, "mode0") for lam in self.mode0_eigenvalues(theta, refine=refine)]
        for k, roots in self.regular.items():
            out.extend((lam, f"k{k}") for lam in roots)
        out.sort()
        return out
