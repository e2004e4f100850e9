import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from efie_hybrid.mesh import (MeshError, TriangleMesh, build_rwg, generate_sphere,
                              generate_uv_sphere, load_mesh, save_mesh)

TETRA = """# regular tetrahedron
v 1 1 1
v 1 -1 -1
v -1 1 -1
v -1 -1 1
f 1 2 3
f 1 4 2
f 1 3 4
f 2 4 3
"""


@pytest.fixture
def tetra_file(tmp_path):
    p = tmp_path / "tetra.txt"
    p.write_text(TETRA)
    return p


def test_load_tetrahedron(tetra_file):
    mesh = load_mesh(tetra_file)
    assert (mesh.n_vertices, mesh.n_triangles, mesh.n_edges) == (4, 4, 6)
    assert mesh.euler_characteristic == 2
    assert build_rwg(mesh).n_edges == 6


def test_non_manifold_edge_reported(tmp_path):
    # three triangles fanned around the edge (1, 2)
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n"
    p = tmp_path / "fan.txt"
    p.write_text(text)
    with pytest.raises(MeshError) as err:
        load_mesh(p)
    assert err.value.edge is not None


def test_open_surface_rejected():
    with pytest.raises(MeshError, match="open"):
        TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))


def test_parse_error_names_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("v 0 0 0\nv 1 0\n")
    with pytest.raises(MeshError, match=":2:"):
        load_mesh(p)


def test_degenerate_triangle_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], float)
    with pytest.raises(MeshError, match="degenerate"):
        TriangleMesh(v, np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]))


def test_inconsistent_orientation_rejected(tetra_file):
    mesh = load_mesh(tetra_file)
    t = mesh.triangles.copy()
    t[0] = t[0, [0, 2, 1]]
    with pytest.raises(MeshError, match="orientation"):
        TriangleMesh(mesh.vertices, t)


def test_inward_mesh_flipped_outward():
    m = generate_sphere(1.0, 0)
    flipped = TriangleMesh(m.vertices, m.triangles[:, [0, 2, 1]])
    assert np.all(np.einsum("ij,ij->i", flipped.normals, flipped.centroids) > 0)


def test_icosahedron_counts():
    m = generate_sphere(1.0, 0)
    assert (m.n_triangles, m.n_vertices, m.n_edges) == (20, 12, 30)
    assert m.n_vertices - m.n_edges + m.n_triangles == 2


def test_level2_counts():
    m = generate_sphere(1.0, 2)
    assert (m.n_triangles, m.n_vertices) == (320, 162)
    assert build_rwg(m).n_edges == 480


def test_chord_error_radius_quarter():
    r = 0.25
    m = generate_sphere(r, 2)
    dist = r - np.linalg.norm(m.centroids, axis=1)
    assert dist.max() < 0.02 * r


def test_uv_sphere_matches_reference_counts():
    m = generate_uv_sphere(1.0, 71, 22)
    assert (m.n_triangles, m.n_vertices) == (2982, 1493)
    assert build_rwg(m).n_edges == 4473


def test_area_converges_to_sphere():
    errs = [abs(generate_sphere(1.0, L).total_area - 4 * np.pi) for L in range(4)]
    assert errs[2] < 0.05 * 4 * np.pi
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_rwg_structure():
    m = generate_sphere(1.0, 1)
    rwg = build_rwg(m)
    assert np.all(rwg.plus_triangle < rwg.minus_triangle)
    keys = rwg.edge_vertices
    assert np.all(keys[:, 0] < keys[:, 1])
    assert np.all(np.diff(keys[:, 0] * m.n_vertices + keys[:, 1]) > 0)
    for e in range(rwg.n_edges):
        tp, tm = m.triangles[rwg.plus_triangle[e]], m.triangles[rwg.minus_triangle[e]]
        shared = set(tp) & set(tm)
        assert shared == set(keys[e])
        assert rwg.plus_free_vertex[e] in set(tp) - shared
        assert rwg.minus_free_vertex[e] in set(tm) - shared
    np.testing.assert_allclose(
        rwg.lengths, np.linalg.norm(m.vertices[keys[:, 0]] - m.vertices[keys[:, 1]], axis=1))


def test_rwg_deterministic_across_loads(tmp_path):
    m = generate_sphere(2.0, 1)
    save_mesh(m, tmp_path / "s.txt")
    a = build_rwg(load_mesh(tmp_path / "s.txt"))
    b = build_rwg(load_mesh(tmp_path / "s.txt"))
    np.testing.assert_array_equal(a.edge_vertices, b.edge_vertices)
    np.testing.assert_array_equal(a.plus_triangle, b.plus_triangle)
    np.testing.assert_allclose(a.lengths, build_rwg(m).lengths, rtol=1e-15)


@settings(max_examples=20, deadline=None)
@given(level=st.integers(0, 3), radius=st.floats(0.01, 100.0))
def test_closed_mesh_edge_count(level, radius):
    m = generate_sphere(radius, level)
    assert m.n_triangles == 20 * 4 ** level
    assert build_rwg(m).n_edges == 3 * m.n_triangles // 2
    assert m.euler_characteristic == 2


@settings(max_examples=15, deadline=None)
@given(nlon=st.integers(3, 30), nb=st.integers(2, 15))
def test_uv_sphere_closed(nlon, nb):
    m = generate_uv_sphere(1.0, nlon, nb)
    assert m.n_triangles == 2 * nlon * (nb - 1)
    assert build_rwg(m).n_edges == 3 * m.n_triangles // 2
