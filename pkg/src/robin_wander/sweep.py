"""Epsilon sweeps of the regularized spectra and the wandering-law checks.

The regularization parameter is swept log-uniformly, eps_j = eps_max *
exp(-j (pi/b0) / samples_per_period), so that one period of the law

    theta_eps = theta* - 2 b0 ln(eps)   (mod 2pi)

corresponds to exactly samples_per_period grid steps.  The single unknown
offset theta* (the near-field scattering phase) is fitted by matching the
finite-element eigenvalues against the extension-oracle spectra; the
log-periodicity and coverage reports then compare spectra one period
apart and measure how densely the union of spectra fills an interval.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .extensions import ExtensionOracle, singular_basis
from .fem import RobinProfile, SpectralResult, assemble, extract_in_out, solve_window
from .geometry import build_half_disk_mesh

TWO_PI = 2.0 * math.pi


class SweepError(Exception):
    pass


class FlatObjectiveError(SweepError):
    """The offset objective does not discriminate: window too narrow or
    meshes underresolved."""


def worker_count() -> int:
    env = os.environ.get("ROBIN_WANDER_THREADS", "")
    try:
        n = int(env)
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class EpsGrid:
    eps_max: float
    periods: int
    samples_per_period: int

    def values(self, b0: float) -> np.ndarray:
        if self.samples_per_period < 8:
            raise SweepError("samples_per_period must be >= 8")
        n = self.periods * self.samples_per_period
        j = np.arange(n + 1)
        return self.eps_max * np.exp(-j * (math.pi / b0) / self.samples_per_period)


@dataclass(frozen=True)
class MeshParams:
    R: float = 1.0
    h_max: float = 0.05
    ratio: float = 1.03
    n_angular_min: int = 88
    r_min_factor: float = 0.1   # r_min = eps * r_min_factor


@dataclass
class SweepEntry:
    eps: float
    r_min: float
    result: SpectralResult | None
    error: str | None = None

    @property
    def usable(self) -> bool:
        return self.result is not None


@dataclass
class SweepTable:
    profile: RobinProfile
    b0: float
    window: tuple[float, float]
    mesh_params: MeshParams
    grid: EpsGrid
    entries: list[SweepEntry]
    theta_offset: float | None = None
    offset_residual: float | None = None

    @property
    def period(self) -> float:
        return math.pi / self.b0

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([e.eps for e in self.entries])


def _solve_one(profile: RobinProfile, eps: float, window, mesh_params: MeshParams,
               dense_cap: int, tol: float, extract: bool) -> SweepEntry:
    r_min = eps * mesh_params.r_min_factor
    try:
        mesh = build_half_disk_mesh(mesh_params.R, mesh_params.h_max, r_min,
                                    mesh_params.ratio, mesh_params.n_angular_min)
        prof = RobinProfile(a0=profile.a0, eps=eps, c2=profile.c2, variant=profile.variant)
        pair = assemble(mesh, prof)
        result = solve_window(pair, window, tol=tol, dense_cap=dense_cap,
                              parameter=("eps", eps))
        if extract and result.eigenvalues.size:
            b0 = 1.0 / profile.a0
            basis = singular_basis(b0)
            lo_r = 10.0 * eps * 1.05
            hi_r = mesh_params.R / 4.0 * 0.98
            if lo_r < hi_r:
                radii = np.geomspace(lo_r, hi_r, 12)
                fits = extract_in_out(result, mesh, b0, basis, radii)
                result.coefficients = [
                    {"c_in": [f.c_in.real, f.c_in.imag],
                     "c_out": [f.c_out.real, f.c_out.imag],
                     "fit_residual": f.fit_residual,
                     "ill_conditioned": f.ill_conditioned}
                    for f in fits
                ]
        result.vectors = None  # sweep tables keep only spectra and coefficients
        return SweepEntry(eps=eps, r_min=r_min, result=result)
    except Exception as exc:  # recorded per-eps, sweep continues
        return SweepEntry(eps=eps, r_min=r_min, result=None, error=f"{type(exc).__name__}: {exc}")


def run_sweep(profile: RobinProfile, window: tuple[float, float], grid: EpsGrid,
              mesh_params: MeshParams = MeshParams(), dense_cap: int = 2500,
              tol: float = 1e-8, extract: bool = True, threads: int | None = None,
              ) -> SweepTable:
    """Solve the window spectrum of A^eps over the log-uniform grid.

    Per-eps failures are recorded as gaps; meshes use r_min = eps/10 by
    default.  Independent solves run on a thread pool capped by
    ROBIN_WANDER_THREADS (results are ordered deterministically).
    """
    b0 = 1.0 / profile.a0
    if grid.eps_max > mesh_params.R / 100.0:
        raise SweepError(f"eps_max {grid.eps_max} too large for R = {mesh_params.R} "
                         "(require <= R/100)")
    eps_values = grid.values(b0)
    n_workers = worker_count() if threads is None else max(1, threads)
    jobs = [(profile, float(e), window, mesh_params, dense_cap, tol, extract)
            for e in eps_values]
    if n_workers == 1:
        entries = [_solve_one(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            entries = list(pool.map(lambda j: _solve_one(*j), jobs))
    return SweepTable(profile=profile, b0=b0, window=(float(window[0]), float(window[1])),
                      mesh_params=mesh_params, grid=grid, entries=entries)


# ---------------------------------------------------------------------------
# offset fit

@dataclass(frozen=True)
class MismatchRow:
    eps: float
    theta_eps: float
    lam_fem: float
    lam_oracle: float
    family: str
    mismatch: float


@dataclass
class OffsetFit:
    theta_star: float
    objective: float
    rows: list[MismatchRow]
    grid_thetas: np.ndarray
    grid_objectives: np.ndarray

    def mean_mismatch(self) -> float:
        return float(np.mean([r.mismatch for r in self.rows])) if self.rows else float("nan")


def _oracle_sets(oracle: ExtensionOracle, thetas, refine: bool):
    return [oracle.eigenvalues(th, refine=refine) for th in thetas]


def _objective_for(fem_spectra, oracle_sets) -> float:
    total = 0.0
    for lams, oset in zip(fem_spectra, oracle_sets):
        if not oset:
            return float("inf")
        ovals = np.array([v for v, _ in oset])
        for lam in lams:
            total += float(np.min((ovals - lam) ** 2))
    return total


def fit_offset(table: SweepTable, oracle: ExtensionOracle | None = None,
               n_grid: int = 512, pad: float = 2.0) -> OffsetFit:
    """Fit the single near-field phase offset theta* in [0, 2pi).

    Minimizes the summed squared distance between each FEM eigenvalue and
    the nearest oracle eigenvalue of the extension at theta* - 2 b0 ln eps,
    on a 512-point grid followed by golden-section refinement.
    """
    usable = [e for e in table.entries if e.usable]
    if len(usable) < 8:
        raise SweepError(f"need >= 8 usable spectra, have {len(usable)}")
    b0 = table.b0
    if oracle is None:
        lo, hi = table.window
        oracle = ExtensionOracle(b0, table.mesh_params.R, (lo - pad, hi + pad))
    fem_spectra = [e.result.eigenvalues for e in usable]
    lneps = np.array([math.log(e.eps) for e in usable])

    thetas = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    objs = np.empty(n_grid)
    for i, th in enumerate(thetas):
        osets = _oracle_sets(oracle, (th - 2.0 * b0 * lneps) % TWO_PI, refine=False)
        objs[i] = _objective_for(fem_spectra, osets)
    finite = objs[np.isfinite(objs)]
    if finite.size == 0:
        raise SweepError("objective everywhere infinite; oracle window too narrow")
    if (finite.max() - finite.min()) < 0.05 * max(finite.max(), 1e-300):
        raise FlatObjectiveError("offset objective is flat; window too narrow or "
                                 "meshes underresolved")
    i_best = int(np.argmin(objs))

    def f(th: float) -> float:
        osets = _oracle_sets(oracle, (th - 2.0 * b0 * lneps) % TWO_PI, refine=True)
        return _objective_for(fem_spectra, osets)

    # golden-section refinement around the best grid cell
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a = thetas[i_best] - TWO_PI / n_grid
    b = thetas[i_best] + TWO_PI / n_grid
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(40):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        if b - a < 1e-7:
            break
    theta_star = float((0.5 * (a + b)) % TWO_PI)
    best = f(theta_star)

    rows: list[MismatchRow] = []
    for e, lneps_j in zip(usable, lneps):
        th_eps = float((theta_star - 2.0 * b0 * lneps_j) % TWO_PI)
        oset = oracle.eigenvalues(th_eps, refine=True)
        ovals = np.array([v for v, _ in oset])
        fams = [fam for _, fam in oset]
        for lam in e.result.eigenvalues:
            k = int(np.argmin(np.abs(ovals - lam)))
            rows.append(MismatchRow(eps=e.eps, theta_eps=th_eps, lam_fem=float(lam),
                                    lam_oracle=float(ovals[k]), family=fams[k],
                                    mismatch=float(abs(ovals[k] - lam))))
    table.theta_offset = theta_star
    table.offset_residual = best
    return OffsetFit(theta_star=theta_star, objective=best, rows=rows,
                     grid_thetas=thetas, grid_objectives=objs)


# ---------------------------------------------------------------------------
# log-periodicity

@dataclass(frozen=True)
class PairComparison:
    eps_hi: float
    eps_lo: float
    n_matched: int
    mean_rel: float
    max_rel: float


@dataclass
class LogPeriodicityReport:
    lag: int
    tol: float
    pairs: list[PairComparison]
    mean_rel: float
    max_rel: float
    passed: bool


def _align_sorted(a: np.ndarray, b: np.ndarray) -> list[tuple[float, float]]:
    """Pair two sorted spectra; when lengths differ, slide the shorter one
    to the contiguous alignment with the least total distance."""
    if len(a) == 0 or len(b) == 0:
        return []
    if len(a) > len(b):
        return [(x, y) for (y, x) in _align_sorted(b, a)]
    best, best_cost = 0, float("inf")
    for off in range(len(b) - len(a) + 1):
        cost = float(np.sum(np.abs(a - b[off:off + len(a)])))
        if cost < best_cost:
            best, best_cost = off, cost
    return list(zip(a.tolist(), b[best:best + len(a)].tolist()))


def check_log_periodicity(table: SweepTable, tol: float = 0.05,
                          lag: int | None = None) -> LogPeriodicityReport:
    """Compare spectra one period apart (eps and eps e^{-pi/b0}).

    The grid spacing makes the lag exactly samples_per_period; `lag` can be
    overridden (e.g. half a period) for control comparisons that must fail.
    """
    spp = table.grid.samples_per_period
    if lag is None:
        if len(table.entries) < 2 * spp + 1:
            raise SweepError("log-periodicity needs a sweep spanning >= 2 periods")
        lag = spp
    if len(table.entries) <= lag:
        raise SweepError("sweep span insufficient for the requested lag")
    pairs: list[PairComparison] = []
    rels: list[float] = []
    for j in range(len(table.entries) - lag):
        e_hi, e_lo = table.entries[j], table.entries[j + lag]
        if not (e_hi.usable and e_lo.usable):
            continue
        matched = _align_sorted(e_hi.result.eigenvalues, e_lo.result.eigenvalues)
        if not matched:
            continue
        r = [abs(x - y) / max(abs(x), abs(y), 1.0) for x, y in matched]
        pairs.append(PairComparison(eps_hi=e_hi.eps, eps_lo=e_lo.eps,
                                    n_matched=len(matched),
                                    mean_rel=float(np.mean(r)), max_rel=float(np.max(r))))
        rels.extend(r)
    if not rels:
        raise SweepError("no comparable spectra pairs")
    mean_rel = float(np.mean(rels))
    max_rel = float(np.max(rels))
    return LogPeriodicityReport(lag=lag, tol=tol, pairs=pairs, mean_rel=mean_rel,
                                max_rel=max_rel, passed=bool(mean_rel <= tol))


# ---------------------------------------------------------------------------
# coverage

@dataclass(frozen=True)
class CoverageReport:
    interval: tuple[float, float]
    resolution: int
    n_points: int
    max_gap: float


def _max_gap(points: np.ndarray, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    pts = np.sort(points[(points >= lo) & (points <= hi)])
    if pts.size == 0:
        return hi - lo
    gaps = np.diff(np.concatenate([[lo], pts, [hi]]))
    return float(np.max(gaps))


def oracle_coverage(oracle: ExtensionOracle, interval: tuple[float, float],
                    n_theta: int) -> CoverageReport:
    """Union of mode-0 eigenvalues over a theta grid; the max uncovered gap
    shrinks like 1/resolution as the union densifies toward all of R."""
    lo, hi = float(interval[0]), float(interval[1])
    pts: list[float] = []
    for th in np.linspace(0.0, TWO_PI, n_theta, endpoint=False):
        pts.extend(oracle.mode0_eigenvalues(th, refine=False))
    arr = np.array(pts) if pts else np.empty(0)
    return CoverageReport(interval=(lo, hi), resolution=n_theta,
                          n_points=int(np.sum((arr >= lo) & (arr <= hi))),
                          max_gap=_max_gap(arr, lo, hi))


def sweep_coverage(table: SweepTable, interval: tuple[float, float]) -> CoverageReport:
    """Union over eps of the computed spectra, clipped to the interval."""
    lo, hi = float(interval[0]), float(interval[1])
    pts: list[float] = []
    for e in table.entries:
        if e.usable:
            pts.extend(e.result.eigenvalues.tolist())
    arr = np.array(pts) if pts else np.empty(0)
    return CoverageReport(interval=(lo, hi), resolution=table.grid.samples_per_period,
                          n_points=int(np.sum((arr >= lo) & (arr <= hi))),
                          max_gap=_max_gap(arr, lo, hi))


def coverage_report(source, interval: tuple[float, float],
                    resolution: int = 256) -> CoverageReport:
    """Largest uncovered gap of the eigenvalue union, from either a sweep
    table (union over eps) or an extension oracle (union over a theta grid
    of the given resolution)."""
    if isinstance(source, SweepTable):
        return sweep_coverage(source, interval)
    if isinstance(source, ExtensionOracle):
        return oracle_coverage(source, interval, resolution)
    raise SweepError(f"cannot build a coverage report from {type(source).__name__}")


# ---------------------------------------------------------------------------
# branch bookkeeping

def match_adjacent(table: SweepTable, guard: float = 0.5) -> list[dict]:
    """Nearest-continuation matching between adjacent eps samples.

    Returns per-step records of matched eigenvalue moves and unmatched
    re-entries; a match is rejected (flagged) when the inter-branch
    distance does not exceed the intra-branch step by the guard factor.
    """
    steps = []
    usable = [e for e in table.entries if e.usable]
    for j in range(len(usable) - 1):
        cur = usable[j].result.eigenvalues
        nxt = usable[j + 1].result.eigenvalues
        moves, entered = [], []
        taken = set()
        for lam in cur:
            if nxt.size == 0:
                break
            k = int(np.argmin(np.abs(nxt - lam)))
            if k in taken:
                continue
            dist = abs(nxt[k] - lam)
            others = np.abs(np.delete(nxt, k) - lam)
            ambiguous = bool(others.size and others.min() < (1.0 + guard) * dist)
            moves.append({"from": float(lam), "to": float(nxt[k]), "ambiguous": ambiguous})
            taken.add(k)
        entered = [float(v) for i, v in enumerate(nxt) if i not in taken]
        steps.append({"eps_from": usable[j].eps, "eps_to": usable[j + 1].eps,
                      "moves": moves, "entered": entered})
    return steps
