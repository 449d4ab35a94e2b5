"""Mesh construction, bisection refinement, conformity, and exchange format."""

import io

import numpy as np
import pytest

from afem import (DIRICHLET, NEUMANN, Mesh, MeshHierarchy, create_initial,
                  overlay, read_text, refine, uniform_refine, write_text)
from afem.mesh import closure_cost, locate

from oracles import random_mesh


def edge_census(mesh):
    """Sorted-edge -> count over all triangles, computed directly."""
    census = {}
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            census[key] = census.get(key, 0) + 1
    return census


def assert_conforming(mesh):
    census = edge_census(mesh)
    assert set(census.values()) <= {1, 2}, "edge shared by more than two triangles"
    boundary = {(min(a, b), max(a, b)) for a, b in mesh.boundary_edges}
    single = {e for e, c in census.items() if c == 1}
    assert single == boundary, "boundary list must be exactly the single-count edges"
    assert mesh.signed_areas().min() > 0


def test_initial_meshes():
    sq = create_initial("unit_square")
    assert sq.n_vertices == 4 and sq.n_triangles == 2
    assert len(sq.boundary_edges) == 4
    assert (sq.boundary_markers == DIRICHLET).all()
    assert np.isclose(sq.areas.sum(), 1.0)
    assert_conforming(sq)

    ls = create_initial("l_shape")
    assert ls.n_vertices == 8 and ls.n_triangles == 6
    assert len(ls.boundary_edges) == 8
    assert (ls.boundary_markers == DIRICHLET).all()
    assert np.isclose(ls.areas.sum(), 3.0)
    assert_conforming(ls)

    zs = create_initial("z_shape")
    assert zs.n_vertices == 10 and zs.n_triangles == 8
    assert len(zs.boundary_edges) == 10
    markers = list(zs.boundary_markers)
    assert markers.count(DIRICHLET) == 2
    assert markers[0] == DIRICHLET and markers[9] == DIRICHLET
    assert markers[1:9] == [NEUMANN] * 8
    # square of area 4 minus the wedge of opening pi/4: 4 - tan(pi/8)
    assert np.isclose(zs.areas.sum(), 4.0 - (np.sqrt(2.0) - 1.0))
    assert_conforming(zs)

    with pytest.raises(ValueError):
        create_initial("pentagon")


def test_domain_name_normalization():
    a = create_initial("z_shape")
    b = create_initial("zshape")
    c = create_initial("Z-Shape")
    assert (a.triangles == b.triangles).all()
    assert (a.triangles == c.triangles).all()


def test_refinement_edge_is_longest_edge():
    for name in ("unit_square", "l_shape", "z_shape"):
        mesh = create_initial(name)
        pts = mesh.vertices[mesh.triangles]
        lengths = np.stack([
            np.linalg.norm(pts[:, 2] - pts[:, 1], axis=1),  # opposite vertex 0
            np.linalg.norm(pts[:, 0] - pts[:, 2], axis=1),
            np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1),
        ], axis=1)
        assert np.allclose(lengths[:, 0], lengths.max(axis=1))


def test_refine_single_mark_on_square():
    # marking one triangle bisects the shared diagonal, so closure splits both
    mesh = create_initial("unit_square")
    fine = refine(mesh, [0])
    assert fine.n_triangles == 4
    assert fine.n_vertices == 5
    assert_conforming(fine)
    # the new vertex is the diagonal midpoint
    new = fine.vertices[4]
    assert np.allclose(new, [0.5, 0.5])
    assert fine.level == 1 and mesh.level == 0


def test_uniform_refine_square_twice():
    # first pass bisects the diagonal (2 -> 4); the children's refinement
    # edges are the outer square edges, each owned by one triangle, so the
    # second pass adds one midpoint per outer edge (4 -> 8)
    mesh = create_initial("unit_square")
    once = uniform_refine(mesh)
    assert once.n_triangles == 4
    twice = uniform_refine(once)
    assert twice.n_triangles == 8
    assert twice.n_vertices == 9
    assert_conforming(twice)
    assert np.isclose(twice.areas.sum(), 1.0)


def test_children_partition_parents():
    rng = np.random.default_rng(7)
    mesh = create_initial("z_shape")
    for _ in range(5):
        marked = rng.choice(mesh.n_triangles,
                            size=max(1, mesh.n_triangles // 3), replace=False)
        fine = refine(mesh, marked)
        assert_conforming(fine)
        child_area = np.zeros(mesh.n_triangles)
        np.add.at(child_area, fine.parent_of, fine.areas)
        assert np.allclose(child_area, mesh.areas, rtol=1e-12)
        # children of one parent are stored contiguously in parent order
        assert (np.diff(fine.parent_of) >= 0).all()
        counts = np.bincount(fine.parent_of, minlength=mesh.n_triangles)
        assert counts.min() >= 1 and counts.max() <= 4
        # every marked triangle was actually bisected
        assert (counts[np.asarray(marked)] >= 2).all()
        mesh = fine


def test_new_vertices_are_edge_midpoints():
    rng = np.random.default_rng(11)
    mesh = create_initial("l_shape")
    fine = refine(mesh, rng.choice(6, size=3, replace=False))
    assert fine.n_coarse_vertices == mesh.n_vertices
    created = np.arange(mesh.n_vertices, fine.n_vertices)
    assert fine.vertex_parents.shape == (created.size, 2)
    mids = fine.vertices[fine.vertex_parents].mean(axis=1)
    assert np.allclose(fine.vertices[created], mids)
    # parents are coarse-mesh vertices joined by a coarse edge
    assert fine.vertex_parents.max() < mesh.n_vertices
    coarse_edges = set(edge_census(mesh))
    for a, b in fine.vertex_parents:
        assert (min(a, b), max(a, b)) in coarse_edges


def test_boundary_markers_inherited():
    mesh = create_initial("z_shape")
    fine = uniform_refine(uniform_refine(mesh))
    assert_conforming(fine)
    n_d = int((fine.boundary_markers == DIRICHLET).sum())
    n_n = int((fine.boundary_markers == NEUMANN).sum())
    # each boundary edge of the fan is bisected twice, markers follow along
    assert n_d + n_n == len(fine.boundary_edges)
    slit = fine.boundary_edges[fine.boundary_markers == DIRICHLET]
    pts = fine.vertices[slit.ravel()]
    # Dirichlet part stays on the slit rays |y| = tan(pi/8) |x|, x <= 0
    assert (pts[:, 0] <= 1e-12).all()
    assert np.allclose(np.abs(pts[:, 1]), (np.sqrt(2.0) - 1.0) * np.abs(pts[:, 0]))


def test_min_angle_stays_bounded():
    mesh = create_initial("z_shape")
    floor = mesh.min_angle() / 2.0 - 1e-12
    mesh = random_mesh("z_shape", np.random.default_rng(3), rounds=8)
    assert mesh.min_angle() >= floor


def test_refine_empty_marking():
    mesh = create_initial("unit_square")
    same = refine(mesh, [])
    assert same.n_triangles == mesh.n_triangles
    assert same.level == 1
    assert (same.parent_of == np.arange(2)).all()


def test_refine_rejects_bad_input():
    mesh = create_initial("unit_square")
    with pytest.raises(ValueError):
        refine(mesh, [5])
    with pytest.raises(ValueError):
        refine(mesh, np.array([True]))
    with pytest.raises(ValueError):
        Mesh([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)], [(0, 1)], [DIRICHLET])


def test_hierarchy_bookkeeping():
    hier = MeshHierarchy(create_initial("l_shape"))
    rng = np.random.default_rng(5)
    markings = []
    for _ in range(6):
        n = hier.finest.n_triangles
        marked = rng.choice(n, size=max(1, n // 4), replace=False)
        markings.append(marked)
        hier.refine(marked)
    assert len(hier.levels) == 7
    spans = hier.new_vertices_per_level
    assert spans[0].size == 0
    total = hier.levels[0].n_vertices + sum(s.size for s in spans)
    assert total == hier.finest.n_vertices
    ratio = closure_cost(hier, markings)
    assert 1.0 <= ratio < 10.0
    with pytest.raises(ValueError):
        hier.append(create_initial("l_shape"))


def test_overlay_refines_both_inputs():
    root = create_initial("unit_square")
    rng = np.random.default_rng(17)
    a = root
    for _ in range(3):
        a = refine(a, rng.choice(a.n_triangles, size=max(1, a.n_triangles // 2),
                                 replace=False))
    b = root
    for _ in range(2):
        b = refine(b, rng.choice(b.n_triangles, size=max(1, b.n_triangles // 3),
                                 replace=False))
    both = overlay(a, b, root)
    assert_conforming(both)
    assert np.isclose(both.areas.sum(), 1.0)
    # overlap estimate: #overlay <= #a + #b - #root
    assert both.n_triangles <= a.n_triangles + b.n_triangles - root.n_triangles
    # every overlay element sits inside one element of a and one of b
    for other in (a, b):
        owner = locate(other, both.centroids())
        covered = np.zeros(other.n_triangles)
        np.add.at(covered, owner, both.areas)
        assert np.allclose(covered, other.areas, rtol=1e-12)


def test_locate():
    mesh = random_mesh("z_shape", np.random.default_rng(23), rounds=3)
    idx = locate(mesh, mesh.centroids())
    assert (idx == np.arange(mesh.n_triangles)).all()
    with pytest.raises(ValueError):
        locate(mesh, np.array([[-0.9, 0.0]]))  # inside the slit wedge


def test_text_round_trip(tmp_path):
    mesh = random_mesh("z_shape", np.random.default_rng(29), rounds=3)
    path = tmp_path / "mesh.txt"
    write_text(mesh, str(path))
    back = read_text(str(path))
    assert (back.vertices == mesh.vertices).all()
    assert (back.triangles == mesh.triangles).all()
    assert (back.boundary_edges == mesh.boundary_edges).all()
    assert (back.boundary_markers == mesh.boundary_markers).all()
    # and through a stream, byte-identical second generation
    buf = io.StringIO()
    write_text(back, buf)
    buf2 = io.StringIO()
    write_text(read_text(io.StringIO(buf.getvalue())), buf2)
    assert buf.getvalue() == buf2.getvalue()


def test_read_text_rejects_malformed(tmp_path):
    with pytest.raises(ValueError):
        read_text(io.StringIO("triangles 1\n0 1 2\n"))
    with pytest.raises(ValueError):
        read_text(io.StringIO("vertices 2\n0 0\n"))
    text = ("vertices 3\n0 0\n1 0\n0 1\n"
            "triangles 1\n0 1 2\n"
            "boundary 3\n0 1 D\n1 2 X\n2 0 D\n")
    with pytest.raises(ValueError):
        read_text(io.StringIO(text))
