"""Graded triangulations of the half-disk with the singular point at the origin.

The domain is Omega = {x1^2 + x2^2 < R^2, x2 > 0}; Gamma1 is the diameter
(carrying the Robin condition, signed abscissa s = x1), Gamma2 the arc
(Neumann).  Because the eigenfunctions oscillate like cos(b0 ln r) near
the origin, the mesh is built from polar rings whose radii grow
geometrically from r_min by `ratio` until the radial increment reaches
h_max, after which rings are uniform; nodes on the outermost ring lie on
the exact circle and the arc is approximated by chords.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np


class MeshError(Exception):
    pass


@dataclass(frozen=True)
class HalfDiskMesh:
    R: float
    nodes: np.ndarray                    # (N, 2) float
    triangles: np.ndarray                # (T, 3) int, CCW
    gamma1_edges: np.ndarray             # (E1, 2) int node pairs on the diameter
    gamma1_intervals: np.ndarray         # (E1, 2) float signed abscissa [s_lo, s_hi]
    gamma2_edges: np.ndarray             # (E2, 2) int node pairs on the arc
    grading: tuple[float, float] | None  # (r_min, ratio)
    h_max: float | None

    def __post_init__(self):
        # immutable after build; safe to share across threads
        for arr in (self.nodes, self.triangles, self.gamma1_edges,
                    self.gamma1_intervals, self.gamma2_edges):
            arr.setflags(write=False)

    @property
    def mesh_id(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.nodes).tobytes())
        h.update(np.ascontiguousarray(self.triangles).tobytes())
        return h.hexdigest()[:12]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def triangle_areas(self) -> np.ndarray:
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        a, b, c = self.triangles[:, 0], self.triangles[:, 1], self.triangles[:, 2]
        return 0.5 * ((x[b] - x[a]) * (y[c] - y[a]) - (x[c] - x[a]) * (y[b] - y[a]))


def _ring_radii(R: float, h_max: float, r_min: float, ratio: float) -> list[float]:
    """Geometric radii r_min * ratio^j while the increment is below h_max,
    then a uniform tail landing exactly on R."""
    radii = [r_min]
    while True:
        r = radii[-1]
        if r * (ratio - 1.0) >= h_max or r * ratio >= R:
            break
        radii.append(r * ratio)
    base = radii[-1]
    remaining = R - base
    if remaining > 1e-12 * R:
        n_u = max(1, int(math.ceil(remaining / h_max - 1e-12)))
        step = remaining / n_u
        radii.extend(base + step * i for i in range(1, n_u + 1))
    radii[-1] = R
    return radii


def build_half_disk_mesh(R: float, h_max: float, r_min: float, ratio: float,
                         n_angular_min: int = 8, aspect_max: float = 3.0) -> HalfDiskMesh:
    """Graded triangulation of the half-disk.

    Preconditions: R > 0, 0 < r_min <= h_max <= R/4, 1 < ratio <= 2.
    Angular counts per ring keep the arc spacing below h_max and within
    aspect_max of the local radial step (the separated eigenfunctions vary
    smoothly in angle but oscillate in ln r, so radially thin elements are
    the efficient shape); rings with different counts are stitched by an
    angle-ordered strip triangulation.
    """
    if not R > 0.0:
        raise MeshError("precondition violated: R > 0")
    if not 0.0 < r_min <= h_max:
        raise MeshError("precondition violated: 0 < r_min <= h_max")
    if not h_max <= R / 4.0 + 1e-12:
        raise MeshError("precondition violated: h_max <= R/4")
    if not 1.0 < ratio <= 2.0:
        raise MeshError("precondition violated: 1 < ratio <= 2")
    if n_angular_min < 4:
        raise MeshError("n_angular_min too small for a valid fan")

    radii = _ring_radii(R, h_max, r_min, ratio)
    nodes: list[tuple[float, float]] = [(0.0, 0.0)]
    rings: list[list[int]] = []
    angles: list[np.ndarray] = []
    for j, rho in enumerate(radii):
        d_in = radii[j] - radii[j - 1] if j > 0 else r_min
        d_out = radii[j + 1] - radii[j] if j + 1 < len(radii) else d_in
        target = min(h_max, aspect_max * max(d_in, d_out))
        n = max(n_angular_min, int(math.ceil(math.pi * rho / target)))
        phi = np.linspace(0.0, math.pi, n + 1)
        ids = list(range(len(nodes), len(nodes) + n + 1))
        nodes.extend((rho * math.cos(p), rho * math.sin(p)) for p in phi)
        # force the diameter endpoints to be exact
        nodes[ids[0]] = (rho, 0.0)
        nodes[ids[-1]] = (-rho, 0.0)
        rings.append(ids)
        angles.append(phi)

    triangles: list[tuple[int, int, int]] = []
    inner0 = rings[0]
    for i in range(len(inner0) - 1):
        triangles.append((0, inner0[i + 1], inner0[i]))
    for j in range(len(rings) - 1):
        inner, outer = rings[j], rings[j + 1]
        ain, aout = angles[j], angles[j + 1]
        i = k = 0
        while i < len(inner) - 1 or k < len(outer) - 1:
            if k == len(outer) - 1:
                advance_inner = True
            elif i == len(inner) - 1:
                advance_inner = False
            else:
                advance_inner = ain[i + 1] <= aout[k + 1]
            if advance_inner:
                triangles.append((inner[i], outer[k], inner[i + 1]))
                i += 1
            else:
                triangles.append((inner[i], outer[k], outer[k + 1]))
                k += 1

    node_arr = np.array(nodes, dtype=float)
    tri_arr = np.array(triangles, dtype=np.int64)
    x, y = node_arr[:, 0], node_arr[:, 1]
    a, b, c = tri_arr[:, 0], tri_arr[:, 1], tri_arr[:, 2]
    signed = (x[b] - x[a]) * (y[c] - y[a]) - (x[c] - x[a]) * (y[b] - y[a])
    flip = signed < 0.0
    tri_arr[flip] = tri_arr[flip][:, [0, 2, 1]]

    pos_chain = [0] + [ids[0] for ids in rings]
    neg_chain = [0] + [ids[-1] for ids in rings]
    g1_edges, g1_iv = [], []
    for j in range(len(pos_chain) - 1):
        i0, i1 = pos_chain[j], pos_chain[j + 1]
        g1_edges.append((i0, i1))
        g1_iv.append((node_arr[i0, 0], node_arr[i1, 0]))
    for j in range(len(neg_chain) - 1):
        i0, i1 = neg_chain[j], neg_chain[j + 1]
        g1_edges.append((i0, i1))
        g1_iv.append((node_arr[i1, 0], node_arr[i0, 0]))
    outer_ring = rings[-1]
    g2_edges = [(outer_ring[i], outer_ring[i + 1]) for i in range(len(outer_ring) - 1)]

    mesh = HalfDiskMesh(
        R=float(R),
        nodes=node_arr,
        triangles=tri_arr,
        gamma1_edges=np.array(g1_edges, dtype=np.int64),
        gamma1_intervals=np.array(g1_iv, dtype=float),
        gamma2_edges=np.array(g2_edges, dtype=np.int64),
        grading=(float(r_min), float(ratio)),
        h_max=float(h_max),
    )
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh: HalfDiskMesh) -> None:
    """Check the structural invariants; raises MeshError on violation."""
    nodes, tris = mesh.nodes, mesh.triangles
    n = nodes.shape[0]
    if tris.min() < 0 or tris.max() >= n:
        raise MeshError("triangle references nonexistent node index")
    areas = mesh.triangle_areas()
    if np.any(areas <= 0.0):
        raise MeshError("non-positive triangle orientation")
    if not np.any(np.all(np.abs(nodes) < 1e-14, axis=1)):
        raise MeshError("no node at the origin")
    for (s_lo, s_hi) in mesh.gamma1_intervals:
        if s_lo >= s_hi:
            raise MeshError("gamma1 interval not ordered")
        if s_lo < 0.0 < s_hi:
            raise MeshError("gamma1 edge straddles s = 0")
    # every boundary edge of the triangulation is tagged exactly once
    edge_count: dict[tuple[int, int], int] = {}
    for tri in tris:
        for (p, q) in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(p, q), max(p, q))
            edge_count[key] = edge_count.get(key, 0) + 1
    boundary = {k for k, v in edge_count.items() if v == 1}
    tagged = [tuple(sorted(e)) for e in mesh.gamma1_edges] + [tuple(sorted(e)) for e in mesh.gamma2_edges]
    if len(tagged) != len(set(tagged)):
        raise MeshError("a boundary edge is tagged more than once")
    if set(tagged) != boundary:
        raise MeshError("boundary tags do not match the triangulation boundary")
    # Euler relation for a triangulated disk-like region: V - E + F = 1
    if n - len(edge_count) + tris.shape[0] != 1:
        raise MeshError("Euler relation violated")
    # area identity: polygon = half-disk minus the circular segments cut by chords
    total = float(np.sum(areas))
    target = 0.5 * math.pi * mesh.R ** 2
    chords = np.linalg.norm(nodes[mesh.gamma2_edges[:, 0]] - nodes[mesh.gamma2_edges[:, 1]], axis=1)
    alpha = 2.0 * np.arcsin(np.clip(chords / (2.0 * mesh.R), 0.0, 1.0))
    chord_deficit = 0.5 * mesh.R ** 2 * float(np.sum(alpha - np.sin(alpha)))
    if abs(target - total - chord_deficit) > 1e-8 * target + 1e-12:
        raise MeshError(f"area mismatch: sum {total:.6g} vs pi R^2/2 = {target:.6g}")
    # gamma2 nodes on the exact circle
    g2_nodes = np.unique(mesh.gamma2_edges)
    rad = np.hypot(nodes[g2_nodes, 0], nodes[g2_nodes, 1])
    if np.max(np.abs(rad - mesh.R)) > 1e-12 * mesh.R:
        raise MeshError("gamma2 node off the circle")


def abscissa_of_gamma1_point(mesh: HalfDiskMesh, point, tol: float = 1e-9) -> float:
    """Signed abscissa of a point on the diameter (s = x1 exactly)."""
    x1, x2 = float(point[0]), float(point[1])
    if abs(x2) > tol * max(1.0, mesh.R):
        raise MeshError(f"point {point} lies off Gamma1 beyond tolerance")
    if abs(x1) > mesh.R * (1.0 + tol):
        raise MeshError(f"point {point} lies outside the diameter")
    return x1


def mesh_to_json(mesh: HalfDiskMesh) -> str:
    doc = {
        "R": mesh.R,
        "nodes": [[float(x), float(y)] for x, y in mesh.nodes],
        "triangles": [[int(i) for i in t] for t in mesh.triangles],
        "gamma1": [[int(i) for i in e] for e in mesh.gamma1_edges],
        "gamma2": [[int(i) for i in e] for e in mesh.gamma2_edges],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def mesh_from_json(text: str) -> HalfDiskMesh:
    doc = json.loads(text)
    nodes = np.array(doc["nodes"], dtype=float)
    g1 = np.array(doc["gamma1"], dtype=np.int64)
    intervals = np.sort(nodes[g1, 0], axis=1)
    mesh = HalfDiskMesh(
        R=float(doc["R"]),
        nodes=nodes,
        triangles=np.array(doc["triangles"], dtype=np.int64),
        gamma1_edges=g1,
        gamma1_intervals=intervals,
        gamma2_edges=np.array(doc["gamma2"], dtype=np.int64),
        grading=None,
        h_max=None,
    )
    validate_mesh(mesh)
    return mesh
