"""Entire radial kernel for separated solutions on the half-disk.

The radial part of every separated mode solves

    f'' + f'/r + (lam - w^2/r^2) f = 0,

with w = i*b0 for the singular angular mode and w = k (integer) for the
regular ones.  Writing f(r) = r^w P(lam r^2; w) turns this into a power
series P(zeta; w) = sum c_m zeta^m with

    c_0 = 1,   c_m = -c_{m-1} / (4 m (m + w)),

which is entire in zeta, so a single code path covers lam < 0, lam = 0 and
lam > 0.  The classical Gamma-function prefactor of Bessel functions is
absorbed into the normalization P(0) = 1; for w = 0 the kernel reduces to
P(zeta; 0) = J0(sqrt(zeta)).

The derivative combination

    Q(zeta; w) = w P(zeta; w) + 2 zeta P'(zeta; w)

satisfies r d/dr [r^w P(lam r^2; w)] = r^w Q(lam r^2; w), so Neumann-type
secular functions are built from Q alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZETA_MAX = 4000.0  # double-precision cancellation guard for the alternating series


class KernelError(Exception):
    """Raised on kernel domain violations or series nonconvergence."""


@dataclass(frozen=True)
class RadialKernelParams:
    """Order and truncation control for the kernel series.

    order: complex w, either i*b0 with b0 > 0 or a nonnegative integer k.
    term_tolerance: relative truncation tolerance against the running
        maximum partial-sum magnitude.
    max_terms: hard cap on the number of series terms.
    """

    order: complex
    term_tolerance: float = 1e-14
    max_terms: int = 400

    def __post_init__(self):
        w = complex(self.order)
        if abs(w.imag) < 1e-300 and w.real < 0 and abs(w.real - round(w.real)) < 1e-12:
            raise KernelError(f"order {w} is a negative integer (recurrence pole)")
        if not (0.0 < self.term_tolerance <= 1e-6):
            raise KernelError("term_tolerance must lie in (0, 1e-6]")
        if self.max_terms < 8:
            raise KernelError("max_terms too small")


@dataclass(frozen=True)
class KernelValue:
    """Kernel evaluation with convergence metadata."""

    value: complex
    terms: int
    precision_loss: bool = False


def _check_zeta(zeta: float) -> float:
    zeta = float(zeta)
    if abs(zeta) > ZETA_MAX:
        raise KernelError(f"|zeta| = {abs(zeta):g} exceeds kernel domain {ZETA_MAX:g}")
    return zeta


def kernel_P_info(zeta: float, params: RadialKernelParams) -> KernelValue:
    """P(zeta; w) with term count and loss-of-precision flag."""
    zeta = _check_zeta(zeta)
    w = complex(params.order)
    term = 1.0 + 0.0j
    total = term
    max_partial = abs(total)
    prev_mag = abs(term)
    for m in range(1, params.max_terms + 1):
        term = term * (-zeta) / (4.0 * m * (m + w))
        total += term
        max_partial = max(max_partial, abs(total))
        mag = abs(term)
        # only stop in the decaying regime: past m ~ sqrt(|zeta|)/2 terms shrink
        if mag < params.term_tolerance * max_partial and mag <= prev_mag and 4.0 * m * m > abs(zeta):
            return KernelValue(total, m, abs(total) < 1e-12 * max_partial)
        prev_mag = mag
    raise KernelError(f"kernel series did not converge within {params.max_terms} terms at zeta={zeta:g}")


def kernel_P(zeta: float, params: RadialKernelParams) -> complex:
    """P(zeta; w) = sum_m c_m zeta^m with c_0 = 1, c_m = -c_{m-1}/(4m(m+w))."""
    return kernel_P_info(zeta, params).value


def kernel_PQ(zeta: float, params: RadialKernelParams) -> tuple[complex, complex]:
    """(P, Q) in one pass; Q(zeta; w) = w P + 2 zeta P'."""
    zeta = _check_zeta(zeta)
    w = complex(params.order)
    term = 1.0 + 0.0j
    total = term
    deriv = 0.0 + 0.0j  # sum m c_m zeta^{m-1}
    max_partial = abs(total)
    prev_mag = abs(term)
    for m in range(1, params.max_terms + 1):
        coef_step = -1.0 / (4.0 * m * (m + w))
        if zeta != 0.0:
            term = term * zeta * coef_step
            deriv += m * term / zeta
        else:
            # only the m = 1 derivative term survives at zeta = 0
            if m == 1:
                deriv += coef_step
            return total, w * total + 2.0 * zeta * deriv
        total += term
        max_partial = max(max_partial, abs(total))
        mag = abs(term)
        if mag < params.term_tolerance * max_partial and mag <= prev_mag and 4.0 * m * m > abs(zeta):
            return total, w * total + 2.0 * zeta * deriv
        prev_mag = mag
    raise KernelError(f"kernel series did not converge within {params.max_terms} terms at zeta={zeta:g}")


def kernel_Q(zeta: float, params: RadialKernelParams) -> complex:
    """Q(zeta; w) = w P(zeta; w) + 2 zeta P'(zeta; w)."""
    return kernel_PQ(zeta, params)[1]


def kernel_P_array(zeta: np.ndarray, params: RadialKernelParams) -> np.ndarray:
    """Vectorized P over an array of zeta values (shared order).

    Runs the recurrence until every entry has converged; used by the
    quadrature-heavy normalization integrals.
    """
    zeta = np.asarray(zeta, dtype=float)
    if zeta.size and np.max(np.abs(zeta)) > ZETA_MAX:
        raise KernelError("zeta array exceeds kernel domain")
    w = complex(params.order)
    term = np.ones(zeta.shape, dtype=complex)
    total = term.copy()
    max_partial = np.abs(total)
    zmax = float(np.max(np.abs(zeta))) if zeta.size else 0.0
    for m in range(1, params.max_terms + 1):
        term = term * (-zeta) / (4.0 * m * (m + w))
        total += term
        np.maximum(max_partial, np.abs(total), out=max_partial)
        if 4.0 * m * m > zmax and np.all(np.abs(term) < params.term_tolerance * max_partial):
            return total
    raise KernelError(f"vector kernel series did not converge within {params.max_terms} terms")


def _debug_main(argv=None) -> int:
    """Debug printer: python -m robin_wander.radial ZETA ORDER [ORDER ...]."""
    import sys

    args = sys.argv[1:] if argv is None else argv
    if len(args) < 2:
        print("usage: python -m robin_wander.radial ZETA ORDER [ORDER ...]", file=sys.stderr)
        return 2
    zeta = float(args[0])
    for token in args[1:]:
        params = RadialKernelParams(order=complex(token))
        p, q = kernel_PQ(zeta, params)
        print(f"zeta={zeta!r} w={complex(token)!r}  P={p!r}  Q={q!r}")
    return 0


if __name__ == "__main__":  # pragma: no cover - exercised via subprocess in tests
    raise SystemExit(_debug_main())
