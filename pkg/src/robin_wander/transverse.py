"""Angular eigenproblem of the model half-plane operator.

Separation of variables in polar coordinates (r, phi), phi in
[-pi/2, pi/2], reduces the model problem to

    -g''(phi) = mu g(phi)

with boundary conditions determined by the coefficient variant.  With the
signed abscissa s = x1 and phi measured from the vertical toward s > 0,
the linear coefficient a(s) = a0*s yields the same condition at both ends,

    a0 g'(+-pi/2) - g(+-pi/2) = 0            ("sign" variant),

whose eigenvalues are {-b0^2} u {k^2, k = 1, 2, ...} with b0 = 1/a0.  The
variant a(s) = a0*|s| flips the sign of a0 on the s < 0 side,

    a0 g'(pi/2) - g(pi/2) = 0,   a0 g'(-pi/2) + g(-pi/2) = 0   ("abs"),

which is reflection-symmetric, so its modes split into even/odd families
with transcendental secular equations; the number of negative eigenvalues
is 2 for a0 < pi/2 and 1 for a0 > pi/2, with mu = 0 (mode g = phi) exactly
at a0 = pi/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BISECT_REL_TOL = 1e-12
SCAN_STEP = 0.05


class TransverseError(Exception):
    pass


@dataclass(frozen=True)
class TransverseMode:
    """Descriptor of one angular mode; `family` fixes the closed form."""

    mu: float
    family: str  # exp | trig | cosh | sinh | linear | cos | sin
    k: int | None = None     # integer index for the sign variant
    param: float = 0.0       # b0, beta, or nu depending on family
    scale: float = 1.0       # multiplicative normalization
    parity: str | None = None  # even | odd, abs variant only


@dataclass(frozen=True)
class TransverseSpectrum:
    a0: float
    b0: float
    variant: str
    eigenvalues: np.ndarray
    modes: tuple[TransverseMode, ...]

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.eigenvalues < 0.0))


def bisect_root(f, lo: float, hi: float, rel_tol: float = BISECT_REL_TOL, max_iter: int = 200) -> float:
    """Plain bisection on a bracketing interval [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise TransverseError(f"root not bracketed on [{lo:g}, {hi:g}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo <= rel_tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _scan_roots(f, lo: float, hi: float, step: float = SCAN_STEP) -> list[float]:
    """All roots of f on (lo, hi] located by sign-change scanning + bisection."""
    roots = []
    n = max(2, int(math.ceil((hi - lo) / step)))
    xs = np.linspace(lo, hi, n + 1)
    vals = np.array([f(x) for x in xs])
    for i in range(n):
        if vals[i] == 0.0:
            if xs[i] > lo:
                roots.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(bisect_root(f, float(xs[i]), float(xs[i + 1])))
    if vals[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def _abs_secular_neg_even(a0: float):
    return lambda b: a0 * b * math.tanh(b * math.pi / 2.0) - 1.0


def _abs_secular_neg_odd(a0: float):
    return lambda b: math.tanh(b * math.pi / 2.0) - a0 * b


def _abs_secular_pos_even(a0: float):
    # pole-free form of a0*nu*tan(nu*pi/2) = -1
    return lambda v: a0 * v * math.sin(v * math.pi / 2.0) + math.cos(v * math.pi / 2.0)


def _abs_secular_pos_odd(a0: float):
    # pole-free form of tan(nu*pi/2) = a0*nu
    return lambda v: a0 * v * math.cos(v * math.pi / 2.0) - math.sin(v * math.pi / 2.0)


def _normalized(family: str, param: float) -> float:
    """Scale such that g(-pi/2) = 1, falling back to g'(-pi/2) = 1."""
    g = _mode_value(family, param, 1.0, np.array([-math.pi / 2.0]), 0)[0]
    if abs(g) > 1e-8:
        return 1.0 / g
    gp = _mode_value(family, param, 1.0, np.array([-math.pi / 2.0]), 1)[0]
    return 1.0 / gp


def transverse_spectrum(a0: float, variant: str = "sign", k_max: int = 4) -> TransverseSpectrum:
    """Angular spectrum for either coefficient variant.

    sign: closed form, mu_0 = -b0^2 and mu_k = k^2 for k = 1..k_max.
    abs:  negative eigenvalues from the even/odd hyperbolic secular
          equations, mu = 0 exactly at a0 = pi/2, and the k_max smallest
          positive eigenvalues from the trigonometric ones.
    """
    if a0 <= 0.0:
        raise TransverseError("a0 must be positive")
    if k_max < 1:
        raise TransverseError("k_max must be >= 1")
    if variant not in ("sign", "abs"):
        raise TransverseError(f"unknown variant {variant!r}")
    b0 = 1.0 / a0

    modes: list[TransverseMode] = []
    if variant == "sign":
        modes.append(TransverseMode(mu=-b0 * b0, family="exp", k=0, param=b0))
        for k in range(1, k_max + 1):
            modes.append(TransverseMode(mu=float(k * k), family="trig", k=k, param=float(k)))
    else:
        hi = 10.0 / a0 + 10.0
        for beta in _scan_roots(_abs_secular_neg_even(a0), 1e-9, hi):
            modes.append(TransverseMode(mu=-beta * beta, family="cosh", param=beta,
                                        scale=_normalized("cosh", beta), parity="even"))
        for beta in _scan_roots(_abs_secular_neg_odd(a0), 1e-9, hi):
            if beta > 1e-6:  # beta = 0 is the trivial root of tanh - a0*beta
                modes.append(TransverseMode(mu=-beta * beta, family="sinh", param=beta,
                                            scale=_normalized("sinh", beta), parity="odd"))
        if abs(a0 - math.pi / 2.0) <= 1e-12:
            modes.append(TransverseMode(mu=0.0, family="linear", param=0.0,
                                        scale=_normalized("linear", 0.0), parity="odd"))
        pos: list[TransverseMode] = []
        span = max(hi, 2.0 * k_max + 6.0)
        for nu in _scan_roots(_abs_secular_pos_even(a0), 1e-9, span):
            pos.append(TransverseMode(mu=nu * nu, family="cos", param=nu,
                                      scale=_normalized("cos", nu), parity="even"))
        for nu in _scan_roots(_abs_secular_pos_odd(a0), 1e-6, span):
            if nu > 1e-6:
                pos.append(TransverseMode(mu=nu * nu, family="sin", param=nu,
                                          scale=_normalized("sin", nu), parity="odd"))
        pos.sort(key=lambda m: m.mu)
        modes.extend(pos[:k_max])

    modes.sort(key=lambda m: m.mu)
    eig = np.array([m.mu for m in modes])
    if np.any(np.diff(eig) <= 0.0):
        raise TransverseError("eigenvalues not strictly increasing; bracketing failure")
    return TransverseSpectrum(a0=a0, b0=b0, variant=variant, eigenvalues=eig, modes=tuple(modes))


def _mode_value(family: str, param: float, scale: float, phi: np.ndarray, deriv: int) -> np.ndarray:
    if family == "exp":
        return scale * param ** deriv * np.exp(param * phi)
    if family == "trig":
        # sign variant, mu = k^2: k even -> k*a0*cos + sin; k odd -> cos - k*a0*sin
        raise AssertionError("trig handled in transverse_mode_eval (needs a0)")
    if family == "cosh":
        f = [np.cosh, np.sinh][deriv % 2]
        return scale * param ** deriv * f(param * phi)
    if family == "sinh":
        f = [np.sinh, np.cosh][deriv % 2]
        return scale * param ** deriv * f(param * phi)
    if family == "linear":
        if deriv == 0:
            return scale * phi
        if deriv == 1:
            return scale * np.ones_like(phi)
        return np.zeros_like(phi)
    if family == "cos":
        table = [np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)]
        return scale * param ** deriv * table[deriv](param * phi)
    if family == "sin":
        table = [np.sin, np.cos, lambda x: -np.sin(x)]
        return scale * param ** deriv * table[deriv](param * phi)
    raise TransverseError(f"unknown mode family {family!r}")


def transverse_mode_eval(spec: TransverseSpectrum, mode_index: int, phi, deriv: int = 0):
    """Evaluate g_k (or its first/second derivative) at angle(s) phi."""
    if not 0 <= mode_index < len(spec.modes):
        raise TransverseError(f"mode index {mode_index} out of range")
    if deriv not in (0, 1, 2):
        raise TransverseError("deriv must be 0, 1 or 2")
    m = spec.modes[mode_index]
    phi_arr = np.asarray(phi, dtype=float)
    scalar = phi_arr.ndim == 0
    phi_arr = np.atleast_1d(phi_arr)
    if m.family == "trig":
        k, a0 = m.param, spec.a0
        c = [np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)][deriv](k * phi_arr)
        s = [np.sin, np.cos, lambda x: -np.sin(x)][deriv](k * phi_arr)
        if m.k is not None and m.k % 2 == 0:
            out = m.scale * k ** deriv * (k * a0 * c + s)
        else:
            out = m.scale * k ** deriv * (c - k * a0 * s)
    else:
        out = _mode_value(m.family, m.param, m.scale, phi_arr, deriv)
    return float(out[0]) if scalar else out


def boundary_residual(spec: TransverseSpectrum, mode_index: int) -> float:
    """Max residual of the variant's boundary conditions for one mode."""
    a0 = spec.a0
    half = math.pi / 2.0
    g_p = transverse_mode_eval(spec, mode_index, half)
    gp_p = transverse_mode_eval(spec, mode_index, half, deriv=1)
    g_m = transverse_mode_eval(spec, mode_index, -half)
    gp_m = transverse_mode_eval(spec, mode_index, -half, deriv=1)
    if spec.variant == "sign":
        res = max(abs(a0 * gp_p - g_p), abs(a0 * gp_m - g_m))
    else:
        res = max(abs(a0 * gp_p - g_p), abs(a0 * gp_m + g_m))
    scale = max(abs(g_p), abs(g_m), abs(a0 * gp_p), abs(a0 * gp_m), 1.0)
    return res / scale


def ode_residual(spec: TransverseSpectrum, mode_index: int, n_samples: int = 101) -> float:
    """Max of |-g'' - mu g| over uniformly spaced phi samples (scaled)."""
    mu = spec.eigenvalues[mode_index]
    phi = np.linspace(-math.pi / 2.0, math.pi / 2.0, n_samples)
    g = transverse_mode_eval(spec, mode_index, phi)
    gpp = transverse_mode_eval(spec, mode_index, phi, deriv=2)
    scale = max(float(np.max(np.abs(g))) * max(abs(mu), 1.0), 1.0)
    return float(np.max(np.abs(-gpp - mu * g))) / scale
