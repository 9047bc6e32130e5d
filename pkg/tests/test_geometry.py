"""Mesh construction, invariants, grading, and JSON round-trip."""

import json
import math

import numpy as np
import pytest

from robin_wander.geometry import (
    MeshError,
    abscissa_of_gamma1_point,
    build_half_disk_mesh,
    mesh_from_json,
    mesh_to_json,
    validate_mesh,
)


def test_ungraded_area_within_two_percent():
    mesh = build_half_disk_mesh(1.0, 0.25, 0.25, 2.0)
    total = float(mesh.triangle_areas().sum())
    assert abs(total - math.pi / 2.0) <= 0.02 * math.pi / 2.0


def test_grading_first_edge_length():
    mesh = build_half_disk_mesh(1.0, 0.1, 1e-4, 1.5)
    pos = sorted((lo, hi) for lo, hi in mesh.gamma1_intervals if lo >= 0.0)
    first = pos[0][1] - pos[0][0]
    assert 1e-4 <= first <= 1.5e-4


def test_grading_geometric_growth():
    ratio = 1.5
    mesh = build_half_disk_mesh(1.0, 0.1, 1e-4, ratio)
    pos = sorted((lo, hi) for lo, hi in mesh.gamma1_intervals if lo >= 0.0)
    lengths = [hi - lo for lo, hi in pos]
    # inside the geometric zone successive edges grow by exactly `ratio`
    for a, b in zip(lengths[1:6], lengths[2:7]):
        assert b / a == pytest.approx(ratio, rel=1e-9)
    assert max(lengths) <= 0.1 + 1e-12


def test_triangle_indices_and_euler_relation():
    mesh = build_half_disk_mesh(1.0, 0.2, 0.05, 1.4)
    assert mesh.triangles.max() < mesh.n_nodes
    edges = set()
    for t in mesh.triangles:
        for pair in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edges.add(tuple(sorted(int(x) for x in pair)))
    assert mesh.n_nodes - len(edges) + mesh.triangles.shape[0] == 1


def test_orientation_positive():
    mesh = build_half_disk_mesh(1.0, 0.2, 0.02, 1.3)
    assert np.all(mesh.triangle_areas() > 0.0)


def test_area_convergence_order():
    hs = [0.2, 0.1, 0.05, 0.025]
    defects = []
    for h in hs:
        mesh = build_half_disk_mesh(1.0, h, h / 2.0, 2.0)
        defects.append(math.pi / 2.0 - float(mesh.triangle_areas().sum()))
    orders = [math.log2(defects[i] / defects[i + 1]) for i in range(len(hs) - 1)]
    assert np.mean(orders) >= 1.9
    assert all(d > 0 for d in defects)


def test_boundary_tags_survive_refinement():
    for h, rmin in ((0.2, 0.02), (0.1, 0.01)):
        mesh = build_half_disk_mesh(1.0, h, rmin, 1.4)
        g2_nodes = np.unique(mesh.gamma2_edges)
        assert np.allclose(np.hypot(*mesh.nodes[g2_nodes].T), 1.0, atol=1e-12)
        g1_nodes = np.unique(mesh.gamma1_edges)
        assert np.max(np.abs(mesh.nodes[g1_nodes, 1])) == 0.0


def test_no_edge_straddles_origin():
    mesh = build_half_disk_mesh(1.0, 0.1, 1e-3, 1.3)
    for lo, hi in mesh.gamma1_intervals:
        assert not (lo < 0.0 < hi)
    # and the origin is a node
    assert np.any(np.all(mesh.nodes == 0.0, axis=1))


def test_abscissa():
    mesh = build_half_disk_mesh(1.0, 0.25, 0.1, 1.5)
    assert abscissa_of_gamma1_point(mesh, (0.0, 0.0)) == 0.0
    assert abscissa_of_gamma1_point(mesh, (1.0, 0.0)) == 1.0
    assert abscissa_of_gamma1_point(mesh, (-0.5, 0.0)) == -0.5
    with pytest.raises(MeshError):
        abscissa_of_gamma1_point(mesh, (0.3, 0.2))


def test_precondition_rejections():
    with pytest.raises(MeshError):
        build_half_disk_mesh(-1.0, 0.1, 0.01, 1.5)
    with pytest.raises(MeshError):
        build_half_disk_mesh(1.0, 0.3, 0.01, 1.5)   # h_max > R/4
    with pytest.raises(MeshError):
        build_half_disk_mesh(1.0, 0.1, 0.2, 1.5)    # r_min > h_max
    with pytest.raises(MeshError):
        build_half_disk_mesh(1.0, 0.1, 0.01, 2.5)   # ratio > 2
    with pytest.raises(MeshError):
        build_half_disk_mesh(1.0, 0.1, 0.01, 1.0)   # ratio <= 1


def test_json_round_trip_identity():
    mesh = build_half_disk_mesh(1.0, 0.25, 0.25, 2.0)
    text = mesh_to_json(mesh)
    doc = json.loads(text)
    assert set(doc) == {"R", "nodes", "triangles", "gamma1", "gamma2"}
    mesh2 = mesh_from_json(text)
    assert mesh_to_json(mesh2) == text
    validate_mesh(mesh2)
    assert mesh2.mesh_id == mesh.mesh_id


def test_validate_catches_bad_tags():
    mesh = build_half_disk_mesh(1.0, 0.25, 0.1, 1.5)
    doc = json.loads(mesh_to_json(mesh))
    doc["gamma2"] = doc["gamma2"][:-1]  # drop one arc edge tag
    with pytest.raises(MeshError):
        mesh_from_json(json.dumps(doc))


def test_node_count_scaling():
    # node count grows like O((R/h)^2 + ln(h/r_min)/ln(ratio)) up to constants
    m_coarse = build_half_disk_mesh(1.0, 0.2, 0.1, 1.5)
    m_deep = build_half_disk_mesh(1.0, 0.2, 1e-6, 1.5)
    rings_extra = math.log(0.1 / 1e-6) / math.log(1.5)
    # deep grading adds only O(rings) * O(angular) nodes
    assert m_deep.n_nodes - m_coarse.n_nodes <= 40 * (rings_extra + 2)
