"""P1 finite elements for the regularized Robin Laplacian on the half-disk.

Assembles the symmetric pair (A, M) of the quadratic form

    u  |->  int_Omega |grad u|^2  -  int_Gamma1 a_eps(s)^{-1} |u|^2,

with a_eps(s) = a0 sign(s) eps + a(s) bounded away from zero for eps > 0,
and solves the generalized eigenproblem A x = lam M x on a window.  Two
solver paths share one contract: a dense reduction (factor M, tridiagonal
QL) below `dense_cap` unknowns, and shift-invert Lanczos above it, with
inertia counts of (A - sigma M) certifying that no window eigenvalue was
missed.  Scattering coefficients (c_in, c_out) of discrete eigenfunctions
are extracted from angular moments on arcs inside the matching annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.sparse.linalg import eigsh

from .extensions import SingularBasis
from .geometry import HalfDiskMesh
from .radial import RadialKernelParams, kernel_P_array

# 3-point Gauss on [0, 1]
_GAUSS_X = np.array([0.5 - math.sqrt(3.0 / 5.0) / 2.0, 0.5, 0.5 + math.sqrt(3.0 / 5.0) / 2.0])
_GAUSS_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


class FemError(Exception):
    pass


class WindowCertificationError(FemError):
    """Inertia count and collected eigenvalues disagree after retries."""


@dataclass(frozen=True)
class RobinProfile:
    """Boundary coefficient family a(s) = a0 s + c2 s^2 (sign) or a0|s| + c2 s^2 (abs),
    regularized by a_eps(s) = a0 sign(s) eps + a(s)."""

    a0: float
    eps: float
    c2: float = 0.0
    variant: str = "sign"

    def __post_init__(self):
        if self.a0 <= 0.0:
            raise FemError("a0 must be positive")
        if self.eps < 0.0:
            raise FemError("eps must be nonnegative")
        if self.variant not in ("sign", "abs"):
            raise FemError(f"unknown variant {self.variant!r}")

    def a(self, s):
        s = np.asarray(s, dtype=float)
        lin = self.a0 * (np.abs(s) if self.variant == "abs" else s)
        return lin + self.c2 * s * s

    def a_eps(self, s):
        s = np.asarray(s, dtype=float)
        return self.a0 * np.sign(s) * self.eps + self.a(s)

    def inf_abs_a_eps(self, s_samples) -> float:
        """Observed infimum of |a_eps| over sample abscissae (recorded, not
        reconciled with any normalization of the jump size)."""
        return float(np.min(np.abs(self.a_eps(s_samples))))


@dataclass(frozen=True)
class OperatorPair:
    """Sparse symmetric pair A = K - B_eps and mass M, plus provenance."""

    A: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray   # node index -> dof index (identity for P1 nodes)
    mesh_id: str


@dataclass
class SpectralResult:
    parameter_label: str
    parameter_value: float
    eigenvalues: np.ndarray
    residuals: np.ndarray
    mesh_id: str
    solver: str
    window: tuple[float, float]
    vectors: np.ndarray | None = None          # (n_dof, n_eig), dropped on serialization
    coefficients: list[dict] | None = None     # per-eigenfunction (c_in, c_out, fit quality)

    def to_dict(self) -> dict:
        doc = {
            "parameter": {"label": self.parameter_label, "value": self.parameter_value},
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residuals": [float(v) for v in self.residuals],
            "mesh_id": self.mesh_id,
            "solver": self.solver,
            "window": list(self.window),
        }
        if self.coefficients is not None:
            doc["coefficients"] = self.coefficients
        return doc


def assemble(mesh: HalfDiskMesh, profile: RobinProfile) -> OperatorPair:
    """Stiffness minus boundary term, and consistent mass, for P1 elements.

    K uses the exact per-triangle gradient formulas; B_eps integrates
    a_eps^{-1} times shape products with 3-point Gauss per Gamma1 edge
    (smooth per edge since no edge straddles s = 0); Gamma2 is natural.
    """
    if profile.eps <= 0.0:
        raise FemError("eps = 0 rejected: boundary coefficient is unbounded")
    if profile.variant == "abs":
        # a_eps vanishes at |s| = eps on the s < 0 side for the abs variant,
        # which makes the form integrand singular inside an edge
        raise FemError("abs-variant profiles are not assemblable: a_eps vanishes on Gamma1")

    nodes, tris = mesh.nodes, mesh.triangles
    n = nodes.shape[0]
    x, y = nodes[:, 0], nodes[:, 1]
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    det = (x[b] - x[a]) * (y[c] - y[a]) - (x[c] - x[a]) * (y[b] - y[a])
    if np.any(det <= 0.0):
        raise FemError("mesh has non-positively oriented triangles")
    area = 0.5 * det
    gb = np.stack([y[b] - y[c], y[c] - y[a], y[a] - y[b]])
    gc = np.stack([x[c] - x[b], x[a] - x[c], x[b] - x[a]])

    rows, cols, k_vals, m_vals = [], [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(tris[:, i])
            cols.append(tris[:, j])
            k_vals.append((gb[i] * gb[j] + gc[i] * gc[j]) / (4.0 * area))
            m_vals.append(area / 12.0 * (1.0 + (i == j)))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    K = sp.coo_matrix((np.concatenate(k_vals), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((np.concatenate(m_vals), (rows, cols)), shape=(n, n)).tocsr()

    br, bc, bv = [], [], []
    for (i, j), (s_lo, s_hi) in zip(mesh.gamma1_edges, mesh.gamma1_intervals):
        if s_lo < 0.0 < s_hi:
            raise FemError("gamma1 edge straddles s = 0")
        s_i, s_j = x[i], x[j]
        length = abs(s_j - s_i)
        if length == 0.0:
            continue
        s_q = s_i + _GAUSS_X * (s_j - s_i)
        w_q = _GAUSS_W * length / profile.a_eps(s_q)
        n_i, n_j = 1.0 - _GAUSS_X, _GAUSS_X
        br.extend((i, i, j, j))
        bc.extend((i, j, i, j))
        vij = float(np.sum(w_q * n_i * n_j))
        bv.extend((float(np.sum(w_q * n_i * n_i)), vij, vij, float(np.sum(w_q * n_j * n_j))))
    B = sp.coo_matrix((bv, (br, bc)), shape=(n, n)).tocsr()
    A = (K - B).tocsr()
    return OperatorPair(A=A, M=M, dof_map=np.arange(n), mesh_id=mesh.mesh_id)


def assemble_neumann(mesh: HalfDiskMesh) -> OperatorPair:
    """Pure-Neumann validation pair (boundary term omitted)."""
    pair = assemble(mesh, RobinProfile(a0=1.0, eps=1.0))
    nodes, tris = mesh.nodes, mesh.triangles
    n = nodes.shape[0]
    x, y = nodes[:, 0], nodes[:, 1]
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    det = (x[b] - x[a]) * (y[c] - y[a]) - (x[c] - x[a]) * (y[b] - y[a])
    area = 0.5 * det
    gb = np.stack([y[b] - y[c], y[c] - y[a], y[a] - y[b]])
    gc = np.stack([x[c] - x[b], x[a] - x[c], x[b] - x[a]])
    rows, cols, k_vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(tris[:, i])
            cols.append(tris[:, j])
            k_vals.append((gb[i] * gb[j] + gc[i] * gc[j]) / (4.0 * area))
    K = sp.coo_matrix((np.concatenate(k_vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    return OperatorPair(A=K, M=pair.M, dof_map=np.arange(n), mesh_id=mesh.mesh_id)


# ---------------------------------------------------------------------------
# inertia certification

def inertia_below(pair: OperatorPair, sigma: float, max_retries: int = 4) -> int:
    """Number of pencil eigenvalues below sigma, from the inertia of A - sigma M.

    Banded LDL^T without pivoting after reverse Cuthill-McKee reordering;
    a near-zero pivot means sigma is (numerically) an eigenvalue, so the
    shift is nudged and the count retried.
    """
    shift = sigma
    for attempt in range(max_retries):
        try:
            return _banded_ldl_negatives(pair.A, pair.M, shift)
        except _SingularShift:
            shift = shift + (1e-8 + 1e-7 * attempt) * (1.0 + abs(sigma))
    raise FemError(f"inertia count failed near sigma = {sigma:g}")


class _SingularShift(Exception):
    pass


def _banded_ldl_negatives(A: sp.spmatrix, M: sp.spmatrix, sigma: float) -> int:
    """Sign count of the LDL^T pivots of A - sigma M (no pivoting).

    Works on a sliding dense window of the RCM-reordered band: eliminating
    column j is one rank-1 update of the (bw x bw) trailing window, after
    which the window slides by one and pulls in the next raw column (that
    column receives no updates from eliminated ones outside the band).
    """
    S = (A - sigma * M).tocsr()
    S.eliminate_zeros()
    perm = reverse_cuthill_mckee(S, symmetric_mode=True)
    Sp = S[perm, :][:, perm].tocoo()
    n = Sp.shape[0]
    bw = int(np.max(np.abs(Sp.row - Sp.col))) if Sp.nnz else 0
    scale = float(np.max(np.abs(Sp.data))) if Sp.nnz else 1.0
    tiny = 1e-14 * scale
    Sc = sp.csc_matrix((Sp.data, (Sp.row, Sp.col)), shape=Sp.shape)
    m = bw + 1
    W = np.zeros((m, m))
    W[:min(m, n), :min(m, n)] = Sc[:min(m, n), :min(m, n)].toarray()
    negatives = 0
    for j in range(n):
        d = W[0, 0]
        if not np.isfinite(d) or abs(d) < tiny:
            raise _SingularShift
        if d < 0.0:
            negatives += 1
        col = W[1:, 0] / d
        W[1:, 1:] -= np.outer(col, W[0, 1:])
        W[:-1, :-1] = W[1:, 1:]
        W[-1, :] = 0.0
        W[:, -1] = 0.0
        nxt = j + m
        if nxt < n:
            lo = j + 1
            seg = Sc[lo:nxt + 1, nxt].toarray().ravel()
            W[:len(seg), -1] = seg
            W[-1, :len(seg)] = seg
    return negatives


# ---------------------------------------------------------------------------
# window eigensolver

def _residuals(A, M, vals, vecs) -> np.ndarray:
    res = np.empty(len(vals))
    for i, lam in enumerate(vals):
        v = vecs[:, i]
        mv = M @ v
        res[i] = np.linalg.norm(A @ v - lam * mv) / max(np.linalg.norm(mv), 1e-300)
    return res


def _refine_pairs(A, M, vals, vecs, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Shifted inverse iteration + Rayleigh quotient to push residuals below tol.

    The graded meshes make ||Mv|| tiny for eigenvectors with mass near the
    origin, so backward-stable dense results can still miss the contract's
    normalization; one or two inverse-iteration sweeps repair that.
    """
    from scipy.sparse.linalg import splu

    A = A.tocsc()
    M = M.tocsc()
    vals = np.array(vals, dtype=float)
    vecs = np.array(vecs, dtype=float)
    for i in range(len(vals)):
        lam, v = vals[i], vecs[:, i]
        for _ in range(3):
            mv = M @ v
            nrm = np.linalg.norm(A @ v - lam * mv) / max(np.linalg.norm(mv), 1e-300)
            if nrm <= 0.1 * tol:
                break
            shift = lam + 1e-6 * (1.0 + abs(lam))
            try:
                w = splu(A - shift * M).solve(mv)
            except RuntimeError:
                break
            w /= np.linalg.norm(w)
            num = w @ (A @ w)
            den = w @ (M @ w)
            if den <= 0.0:
                break
            lam, v = num / den, w
        vals[i], vecs[:, i] = lam, v
    return vals, vecs


def solve_window(pair: OperatorPair, window: tuple[float, float], tol: float = 1e-8,
                 dense_cap: int = 4000, parameter: tuple[str, float] = ("eps", float("nan")),
                 certify: bool = True) -> SpectralResult:
    """All eigenvalues of (A, M) in the window, residual-checked.

    Below dense_cap unknowns the dense symmetric-generalized driver is
    used (Cholesky reduction, tridiagonalization, QL); above it,
    shift-invert Lanczos at interval midpoints.  Either way the count in
    the window is certified against inertia counts at the window ends.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise FemError("empty window")
    n = pair.A.shape[0]
    if n <= dense_cap:
        vals, vecs = sla.eigh(pair.A.toarray(), pair.M.toarray(),
                              subset_by_value=(lo, hi))
        solver = "dense-ql"
        if certify:
            expect = inertia_below(pair, hi) - inertia_below(pair, lo)
            if expect != len(vals):
                # knife-edge eigenvalues at the window ends: recount padded
                d_lo = 1e-8 * (1.0 + abs(lo))
                d_hi = 1e-8 * (1.0 + abs(hi))
                expect = inertia_below(pair, hi + d_hi) - inertia_below(pair, lo - d_lo)
                if expect != len(vals):
                    raise WindowCertificationError(
                        f"dense window [{lo:g}, {hi:g}]: inertia expects {expect}, "
                        f"solver found {len(vals)}")
    else:
        vals, vecs = _sparse_window(pair, lo, hi)
        solver = "shift-invert-certified"
    vals, vecs = _refine_pairs(pair.A, pair.M, vals, vecs, tol)
    order = np.argsort(vals)
    vals = np.asarray(vals)[order]
    vecs = np.asarray(vecs)[:, order]
    res = _residuals(pair.A, pair.M, vals, vecs)
    if np.any(res > tol):
        raise FemError(f"residual contract violated: max residual {res.max():.3e} > {tol:g}")
    return SpectralResult(parameter_label=parameter[0], parameter_value=parameter[1],
                          eigenvalues=vals, residuals=res, mesh_id=pair.mesh_id,
                          solver=solver, window=(lo, hi), vectors=vecs)


def _sparse_window(pair: OperatorPair, lo: float, hi: float,
                   k_cap: int = 60, max_depth: int = 8):
    n = pair.A.shape[0]
    A = pair.A.tocsc()
    M = pair.M.tocsc()

    def count(x: float) -> int:
        return inertia_below(pair, x)

    vals_out: list[float] = []
    vecs_out: list[np.ndarray] = []

    def solve_interval(a: float, b: float, na: int, nb: int, depth: int):
        m = nb - na
        if m == 0:
            return
        if m > k_cap and depth < max_depth:
            mid = 0.5 * (a + b)
            nm = count(mid)
            solve_interval(a, mid, na, nm, depth + 1)
            solve_interval(mid, b, nm, nb, depth + 1)
            return
        sigma = 0.5 * (a + b)
        k = min(m + 6, n - 2)
        v0 = np.sin(np.arange(n) + 1.0)  # deterministic start vector
        got = None
        for attempt in range(4):
            try:
                w, v = eigsh(A, k=k, M=M, sigma=sigma, which="LM", v0=v0,
                             maxiter=3000, tol=0.0)
                got = (w, v)
                break
            except Exception:
                sigma += (1e-6 + 1e-5 * attempt) * (1.0 + abs(sigma))
        if got is None:
            raise FemError(f"shift-invert failed near sigma = {sigma:g}")
        w, v = got
        mask = (w >= a - 1e-12 * (1 + abs(a))) & (w <= b + 1e-12 * (1 + abs(b)))
        if int(np.sum(mask)) != m:
            if depth >= max_depth:
                raise WindowCertificationError(
                    f"window [{a:g}, {b:g}] certified count {m}, solver found {int(np.sum(mask))}")
            mid = 0.5 * (a + b)
            nm = count(mid)
            solve_interval(a, mid, na, nm, depth + 1)
            solve_interval(mid, b, nm, nb, depth + 1)
            return
        vals_out.extend(w[mask].tolist())
        vecs_out.append(v[:, mask])

    n_lo, n_hi = count(lo), count(hi)
    solve_interval(lo, hi, n_lo, n_hi, 0)
    if not vals_out:
        return np.empty(0), np.empty((n, 0))
    return np.array(vals_out), np.concatenate(vecs_out, axis=1)


# ---------------------------------------------------------------------------
# scattering-coefficient extraction

@dataclass(frozen=True)
class CoefficientFit:
    c_in: complex
    c_out: complex
    fit_residual: float
    ill_conditioned: bool = False


def _interp_values(mesh: HalfDiskMesh, vec: np.ndarray, pts: np.ndarray) -> np.ndarray:
    import matplotlib.tri as mtri

    tri = mtri.Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)
    interp = mtri.LinearTriInterpolator(tri, vec)
    out = interp(pts[:, 0], pts[:, 1])
    return np.asarray(out.filled(np.nan))


def extract_in_out(result: SpectralResult, mesh: HalfDiskMesh, b0: float,
                   basis: SingularBasis, radii, n_phi: int = 64,
                   lam_values=None) -> list[CoefficientFit]:
    """(c_in, c_out) per eigenfunction from angular moments on arcs.

    For each radius r_j the moment m(r_j) = [int u_h e^{b0 phi} dphi] /
    [int e^{2 b0 phi} dphi] isolates the singular angular mode; the radial
    samples are least-squares fitted to 2 Re[beta r^{i b0} P(lam r^2)] and
    c_out = beta / c_norm, c_in = conj(beta) / c_norm (real eigenfunctions).
    The relative fit residual is the quality indicator; radii must lie in
    the matching annulus where near-field distortion and far-field
    remainder are both small.
    """
    from numpy.polynomial.legendre import leggauss

    if result.vectors is None:
        raise FemError("SpectralResult carries no eigenvectors")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise FemError("need at least 4 extraction radii")
    xg, wg = leggauss(n_phi)
    phi = 0.5 * math.pi * xg          # model angle, measured from the vertical
    wq = 0.5 * math.pi * wg
    weight = np.exp(b0 * phi)
    denom = math.sinh(math.pi * b0) / b0
    # mesh angle phi' = pi/2 - phi
    pts = np.concatenate([
        np.stack([r * np.sin(phi), r * np.cos(phi)], axis=1) for r in radii
    ])

    if lam_values is None:
        lam_values = result.eigenvalues
    fits: list[CoefficientFit] = []
    for idx in range(result.vectors.shape[1]):
        vals = _interp_values(mesh, result.vectors[:, idx], pts).reshape(len(radii), n_phi)
        if np.any(~np.isfinite(vals)):
            raise FemError("extraction arc leaves the mesh; check radii")
        moments = vals @ (wq * weight) / denom
        lam = float(lam_values[idx])
        F = np.exp(1j * b0 * np.log(radii)) * kernel_P_array(
            lam * radii * radii, RadialKernelParams(order=1j * b0))
        design = np.stack([2.0 * F.real, -2.0 * F.imag], axis=1)
        sv = np.linalg.svd(design, compute_uv=False)
        ill = bool(sv[-1] < 1e-8 * sv[0])
        sol, *_ = np.linalg.lstsq(design, moments, rcond=None)
        beta = complex(sol[0], sol[1])
        fit = design @ sol
        scale = float(np.linalg.norm(moments))
        residual = float(np.linalg.norm(moments - fit) / max(scale, 1e-300))
        c_out = beta / basis.c_norm
        fits.append(CoefficientFit(c_in=np.conj(c_out), c_out=c_out,
                                   fit_residual=residual, ill_conditioned=ill))
    return fits


def write_coo(matrix: sp.spmatrix, path) -> None:
    """Symmetric lower triangle in 'row col value' text format, 0-based."""
    coo = sp.tril(matrix.tocoo())
    with open(path, "w", encoding="utf-8") as fh:
        for r, c, v in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
            fh.write(f"{r} {c} {v!r}\n")
