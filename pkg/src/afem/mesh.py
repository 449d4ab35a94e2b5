"""Conforming triangle meshes and newest-vertex bisection.

Triangles follow the newest-vertex convention: the edge opposite the
first-listed vertex is the refinement edge, and bisecting it inserts the
edge midpoint as the newest vertex of both children.  `refine` produces the
coarsest conforming refinement in which every marked triangle is bisected
at least once (closure marks further refinement edges as needed), `overlay`
computes the coarsest common refinement of two meshes grown from the same
root, and `MeshHierarchy` keeps the level bookkeeping that the multilevel
solver relies on.

Vertex indexing is append-only across refinement: vertices of the coarse
mesh keep their indices, midpoints are appended in edge-id order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

DIRICHLET = 0
NEUMANN = 1

_MARKER_TO_CHAR = {DIRICHLET: "D", NEUMANN: "N"}
_CHAR_TO_MARKER = {"D": DIRICHLET, "N": NEUMANN}


def _pair_codes(pairs: np.ndarray, n_vertices: int) -> np.ndarray:
    """Order-independent integer codes for vertex pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    return lo * np.int64(n_vertices) + hi


@dataclass(frozen=True)
class EdgeTable:
    """Unique-edge connectivity of a triangulation.

    Attributes
    ----------
    nodes : (n_edges, 2) int array, endpoint indices with lo < hi.
    of_triangle : (n_triangles, 3) int array; column k holds the id of the
        edge opposite local vertex k, so column 0 is the refinement edge.
    incident : (n_edges, 2) int array of adjacent triangle ids, -1 padding.
    codes : (n_edges,) sorted pair codes (ascending), for lookups.
    """

    nodes: np.ndarray
    of_triangle: np.ndarray
    incident: np.ndarray
    codes: np.ndarray

    @property
    def n_edges(self) -> int:
        return self.nodes.shape[0]

    @property
    def is_boundary(self) -> np.ndarray:
        return self.incident[:, 1] < 0

    def lookup(self, pairs, n_vertices: int) -> np.ndarray:
        """Edge ids of the given vertex pairs; raises if any is not an edge."""
        codes = _pair_codes(pairs, n_vertices)
        ids = np.searchsorted(self.codes, codes)
        ok = (ids < len(self.codes)) & (self.codes[np.minimum(ids, len(self.codes) - 1)] == codes)
        if not ok.all():
            raise ValueError("vertex pair is not an edge of the mesh")
        return ids


def _build_edge_table(triangles: np.ndarray, n_vertices: int) -> EdgeTable:
    t = np.asarray(triangles, dtype=np.int64)
    n_t = t.shape[0]
    # edge k of a triangle is opposite local vertex k
    pairs = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=0)
    codes = _pair_codes(pairs, n_vertices)
    uniq, inverse = np.unique(codes, return_inverse=True)
    of_triangle = inverse.reshape(3, n_t).T.copy()
    nodes = np.column_stack([uniq // n_vertices, uniq % n_vertices])
    counts = np.bincount(inverse, minlength=len(uniq))
    if len(counts) and counts.max() > 2:
        raise ValueError("non-conforming mesh: an edge is shared by more than two triangles")
    incident = np.full((len(uniq), 2), -1, dtype=np.int64)
    tri_ids = np.tile(np.arange(n_t, dtype=np.int64), 3)
    order = np.argsort(inverse, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)])
    sorted_tris = tri_ids[order]
    incident[:, 0] = sorted_tris[starts[:-1]]
    second = counts == 2
    incident[second, 1] = sorted_tris[starts[:-1][second] + 1]
    return EdgeTable(nodes=nodes, of_triangle=of_triangle, incident=incident, codes=uniq)


class Mesh:
    """Immutable conforming triangulation with a refinement-edge convention.

    Parameters
    ----------
    vertices : (n_vertices, 2) float array.
    triangles : (n_triangles, 3) int array, counterclockwise; the edge
        opposite the first-listed vertex is the refinement edge.
    boundary_edges : (n_boundary, 2) int array of boundary vertex pairs.
    boundary_markers : (n_boundary,) int array, DIRICHLET or NEUMANN.
    level : refinement generation, 0 for a root mesh.
    parent_of : (n_triangles,) indices into the previous mesh (identity for
        a root mesh).
    vertex_parents : (n_new_vertices, 2) endpoint indices of the bisected
        edge that created each appended vertex, or None for a root mesh.
    n_coarse_vertices : vertex count of the previous mesh.
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_markers,
                 level: int = 0, parent_of=None, vertex_parents=None,
                 n_coarse_vertices: int | None = None):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        self.boundary_edges = np.array(boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_markers = np.array(boundary_markers, dtype=np.int64).reshape(-1)
        self.level = int(level)
        if parent_of is None:
            parent_of = np.arange(self.triangles.shape[0], dtype=np.int64)
        self.parent_of = np.array(parent_of, dtype=np.int64)
        self.vertex_parents = (None if vertex_parents is None
                               else np.array(vertex_parents, dtype=np.int64).reshape(-1, 2))
        self.n_coarse_vertices = (self.vertices.shape[0] if n_coarse_vertices is None
                                  else int(n_coarse_vertices))
        if self.boundary_markers.shape[0] != self.boundary_edges.shape[0]:
            raise ValueError("need one marker per boundary edge")
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= self.n_vertices):
            raise ValueError("triangle vertex index out of range")
        if self.signed_areas().size and self.signed_areas().min() <= 0.0:
            raise ValueError("triangles must be positively oriented and non-degenerate")
        for a in (self.vertices, self.triangles, self.boundary_edges,
                  self.boundary_markers, self.parent_of):
            a.setflags(write=False)
        if self.vertex_parents is not None:
            self.vertex_parents.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        a = self.signed_areas()
        a.setflags(write=False)
        return a

    @cached_property
    def edges(self) -> EdgeTable:
        return _build_edge_table(self.triangles, self.n_vertices)

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def refinement_edges(self) -> np.ndarray:
        """Vertex pairs of the per-triangle refinement edges."""
        return self.triangles[:, 1:3]

    def min_angle(self) -> float:
        """Smallest interior angle over all triangles, in radians."""
        p = self.vertices[self.triangles]
        angles = np.empty((self.n_triangles, 3))
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            c = (u * v).sum(axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles[:, k] = np.arccos(np.clip(c, -1.0, 1.0))
        return float(angles.min())

    def dirichlet_vertices(self) -> np.ndarray:
        sel = self.boundary_markers == DIRICHLET
        return np.unique(self.boundary_edges[sel])

    def validate(self) -> "Mesh":
        """Full conformity audit; raises ValueError on any violation."""
        et = self.edges  # raises if an edge has > 2 incident triangles
        uniq_v = np.unique(self.vertices, axis=0)
        if uniq_v.shape[0] != self.n_vertices:
            raise ValueError("duplicate vertex coordinates")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise ValueError("unreferenced vertices")
        bdry_codes = np.sort(et.codes[et.is_boundary])
        listed = np.sort(_pair_codes(self.boundary_edges, self.n_vertices))
        if len(np.unique(listed)) != len(listed):
            raise ValueError("duplicate boundary edge")
        if bdry_codes.shape != listed.shape or not np.array_equal(bdry_codes, listed):
            raise ValueError("boundary_edges do not match the single-incidence edges")
        if not np.isin(self.boundary_markers, (DIRICHLET, NEUMANN)).all():
            raise ValueError("invalid boundary marker")
        return self


def _assign_refinement_edges(vertices, triangles) -> np.ndarray:
    """Rotate triangles so the longest edge (ties: smallest opposite global
    vertex index) is opposite the first-listed vertex."""
    verts = np.asarray(vertices, dtype=float)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    p = verts[tris]
    d = p[:, [2, 0, 1], :] - p[:, [1, 2, 0], :]
    lsq = (d ** 2).sum(axis=2)  # squared length of edge opposite local vertex k
    n_t = tris.shape[0]
    rows = np.arange(n_t)
    best = np.zeros(n_t, dtype=np.int64)
    for k in (1, 2):
        cur_len = lsq[rows, best]
        cur_opp = tris[rows, best]
        better = (lsq[:, k] > cur_len) | ((lsq[:, k] == cur_len) & (tris[:, k] < cur_opp))
        best[better] = k
    cols = (best[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(tris, cols, axis=1)


_SLIT_Y = np.sqrt(2.0) - 1.0  # tan(pi/8): where the slit rays meet x = -1


def create_initial(domain: str) -> Mesh:
    """Canonical initial mesh for one of the built-in domains.

    ``z_shape`` is the square (-1,1)^2 with the wedge of opening pi/4 around
    the negative x axis removed; the two slit edges are Dirichlet, the outer
    boundary is Neumann.  ``l_shape`` is (-1,1)^2 minus [0,1]x[-1,0], pure
    Dirichlet.  ``unit_square`` is (0,1)^2 split along the diagonal, pure
    Dirichlet.  Refinement edges are initialized by longest edge with ties
    broken by smallest opposite vertex index.
    """
    key = domain.replace("_", "").replace("-", "").lower()
    if key == "unitsquare":
        verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        tris = [(0, 1, 2), (0, 2, 3)]
        bedges = [(0, 1), (1, 2), (2, 3), (3, 0)]
        marks = [DIRICHLET] * 4
    elif key == "lshape":
        verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0),
                 (-1.0, 1.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0)]
        tris = [(0, i, i + 1) for i in range(1, 7)]
        bedges = [(i, (i + 1) % 8) for i in range(8)]
        marks = [DIRICHLET] * 8
    elif key == "zshape":
        verts = [(0.0, 0.0), (-1.0, -_SLIT_Y), (-1.0, -1.0), (0.0, -1.0),
                 (1.0, -1.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0),
                 (-1.0, 1.0), (-1.0, _SLIT_Y)]
        tris = [(0, i, i + 1) for i in range(1, 9)]
        bedges = [(i, (i + 1) % 10) for i in range(10)]
        marks = [NEUMANN] * 10
        marks[0] = DIRICHLET   # slit edge (0, 1)
        marks[9] = DIRICHLET   # slit edge (9, 0)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    tris = _assign_refinement_edges(verts, tris)
    return Mesh(verts, tris, bedges, marks)


def refine(mesh: Mesh, marked) -> Mesh:
    """Coarsest conforming refinement bisecting every marked triangle.

    Marked triangles have their refinement edge bisected; the closure loop
    marks the refinement edge of any triangle with a hanging node until the
    result is conforming.  A triangle ends up with 2, 3 or 4 children
    depending on how many of its edges were bisected.

    Parameters
    ----------
    marked : iterable of triangle indices or boolean mask.
    """
    n_t = mesh.n_triangles
    marked = np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked)
    if marked.dtype == bool:
        if marked.shape != (n_t,):
            raise ValueError("boolean mark array has wrong length")
        mask = marked.copy()
    else:
        mask = np.zeros(n_t, dtype=bool)
        if marked.size:
            idx = marked.astype(np.int64)
            if idx.min() < 0 or idx.max() >= n_t:
                raise ValueError("marked triangle index out of range")
            mask[idx] = True
    if not mask.any():
        return Mesh(mesh.vertices, mesh.triangles, mesh.boundary_edges,
                    mesh.boundary_markers, level=mesh.level + 1,
                    parent_of=np.arange(n_t), vertex_parents=np.empty((0, 2), np.int64),
                    n_coarse_vertices=mesh.n_vertices)

    et = mesh.edges
    marked_edge = np.zeros(et.n_edges, dtype=bool)
    marked_edge[et.of_triangle[mask, 0]] = True
    while True:  # closure: hanging nodes force refinement-edge marks
        em = marked_edge[et.of_triangle]
        need = ~em[:, 0] & (em[:, 1] | em[:, 2])
        if not need.any():
            break
        marked_edge[et.of_triangle[need, 0]] = True
    em = marked_edge[et.of_triangle]

    bis_edges = np.nonzero(marked_edge)[0]
    edge_to_new = np.full(et.n_edges, -1, dtype=np.int64)
    edge_to_new[bis_edges] = mesh.n_vertices + np.arange(len(bis_edges))
    midpoints = mesh.vertices[et.nodes[bis_edges]].mean(axis=1)
    new_vertices = np.vstack([mesh.vertices, midpoints])

    z0, z1, z2 = mesh.triangles[:, 0], mesh.triangles[:, 1], mesh.triangles[:, 2]
    m = edge_to_new[et.of_triangle[:, 0]]
    ma = edge_to_new[et.of_triangle[:, 1]]
    mb = edge_to_new[et.of_triangle[:, 2]]
    counts = 1 + em.sum(axis=1)
    offs = np.concatenate([[0], np.cumsum(counts)])
    children = np.empty((offs[-1], 3), dtype=np.int64)

    sel = ~em[:, 0]
    children[offs[:-1][sel]] = mesh.triangles[sel]
    # bisect the refinement edge; children may be bisected again at their
    # own refinement edges (the parent's remaining marked edges)
    b1 = em[:, 0] & ~em[:, 1] & ~em[:, 2]
    o = offs[:-1][b1]
    children[o] = np.column_stack([m[b1], z2[b1], z0[b1]])
    children[o + 1] = np.column_stack([m[b1], z0[b1], z1[b1]])
    b2a = em[:, 0] & em[:, 1] & ~em[:, 2]
    o = offs[:-1][b2a]
    children[o] = np.column_stack([ma[b2a], z0[b2a], m[b2a]])
    children[o + 1] = np.column_stack([ma[b2a], m[b2a], z2[b2a]])
    children[o + 2] = np.column_stack([m[b2a], z0[b2a], z1[b2a]])
    b2b = em[:, 0] & ~em[:, 1] & em[:, 2]
    o = offs[:-1][b2b]
    children[o] = np.column_stack([m[b2b], z2[b2b], z0[b2b]])
    children[o + 1] = np.column_stack([mb[b2b], z1[b2b], m[b2b]])
    children[o + 2] = np.column_stack([mb[b2b], m[b2b], z0[b2b]])
    b3 = em.all(axis=1)
    o = offs[:-1][b3]
    children[o] = np.column_stack([ma[b3], z0[b3], m[b3]])
    children[o + 1] = np.column_stack([ma[b3], m[b3], z2[b3]])
    children[o + 2] = np.column_stack([mb[b3], z1[b3], m[b3]])
    children[o + 3] = np.column_stack([mb[b3], m[b3], z0[b3]])
    parent = np.repeat(np.arange(n_t, dtype=np.int64), counts)

    if mesh.boundary_edges.size:
        bids = et.lookup(mesh.boundary_edges, mesh.n_vertices)
        split = marked_edge[bids]
        bcounts = np.where(split, 2, 1)
        boffs = np.concatenate([[0], np.cumsum(bcounts)])
        bedges = np.empty((boffs[-1], 2), dtype=np.int64)
        bmarks = np.empty(boffs[-1], dtype=np.int64)
        keep = ~split
        bedges[boffs[:-1][keep]] = mesh.boundary_edges[keep]
        bmarks[boffs[:-1][keep]] = mesh.boundary_markers[keep]
        o = boffs[:-1][split]
        mid = edge_to_new[bids[split]]
        bedges[o] = np.column_stack([mesh.boundary_edges[split, 0], mid])
        bedges[o + 1] = np.column_stack([mid, mesh.boundary_edges[split, 1]])
        bmarks[o] = mesh.boundary_markers[split]
        bmarks[o + 1] = mesh.boundary_markers[split]
    else:
        bedges = np.empty((0, 2), dtype=np.int64)
        bmarks = np.empty(0, dtype=np.int64)

    return Mesh(new_vertices, children, bedges, bmarks, level=mesh.level + 1,
                parent_of=parent, vertex_parents=et.nodes[bis_edges],
                n_coarse_vertices=mesh.n_vertices)


def uniform_refine(mesh: Mesh) -> Mesh:
    """Refine with every triangle marked."""
    return refine(mesh, np.arange(mesh.n_triangles))


def locate(mesh: Mesh, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Containing triangle for each point, by brute-force barycentric tests.

    Intended for small meshes (overlay bookkeeping, tests); cost is
    O(n_points * n_triangles).  Raises ValueError if a point lies outside.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    d = points[:, None, :] - p[None, :, 0, :]
    lam1 = (d[..., 0] * e2[None, :, 1] - d[..., 1] * e2[None, :, 0]) / det
    lam2 = (e1[None, :, 0] * d[..., 1] - e1[None, :, 1] * d[..., 0]) / det
    inside = (lam1 >= -tol) & (lam2 >= -tol) & (lam1 + lam2 <= 1 + tol)
    found = inside.any(axis=1)
    if not found.all():
        raise ValueError("point outside the mesh")
    return inside.argmax(axis=1)


def _check_descends_from(mesh: Mesh, root: Mesh, what: str) -> None:
    host = locate(root, mesh.centroids())
    ratio = root.areas[host] / mesh.areas
    depth = np.log2(ratio)
    if np.abs(depth - np.rint(depth)).max() > 1e-6 or depth.min() < -1e-6:
        raise ValueError(f"{what} is not a bisection refinement of the root mesh")


def overlay(a: Mesh, b: Mesh, root: Mesh) -> Mesh:
    """Coarsest common refinement of two meshes grown from the same root.

    Works by replay: any triangle of the current mesh that is strictly
    coarser than the triangle of ``b`` covering the same spot gets marked and
    bisected; closure stays inside the target because the union of two
    conforming bisection forests is conforming.  Terminates after at most
    the bisection depth of ``b`` rounds.
    """
    _check_descends_from(a, root, "first mesh")
    _check_descends_from(b, root, "second mesh")
    current = a
    for _ in range(128):
        host = locate(b, current.centroids())
        ratio = current.areas / b.areas[host]
        depth = np.log2(ratio)
        if np.abs(depth - np.rint(depth)).max() > 1e-6:
            raise ValueError("meshes do not belong to the same bisection forest")
        mark = np.rint(depth) >= 1
        if not mark.any():
            return current
        current = refine(current, np.nonzero(mark)[0])
    raise ValueError("overlay did not terminate; inputs are not compatible refinements")


class MeshHierarchy:
    """Nested sequence of meshes produced by successive refinement."""

    def __init__(self, initial: Mesh):
        self.levels: list[Mesh] = [initial]

    @property
    def finest(self) -> Mesh:
        return self.levels[-1]

    def append(self, mesh: Mesh) -> None:
        if mesh.n_coarse_vertices != self.finest.n_vertices:
            raise ValueError("mesh does not refine the current finest level")
        self.levels.append(mesh)

    def refine(self, marked) -> Mesh:
        new = refine(self.finest, marked)
        self.levels.append(new)
        return new

    @property
    def new_vertices_per_level(self) -> list[np.ndarray]:
        """Index ranges of the vertices created at each level (empty at 0)."""
        out = [np.empty(0, dtype=np.int64)]
        for mesh in self.levels[1:]:
            out.append(np.arange(mesh.n_coarse_vertices, mesh.n_vertices, dtype=np.int64))
        return out


def closure_cost(hierarchy, markings) -> float:
    """Ratio (#T_final - #T_0) / sum of marked-set sizes over the history."""
    levels = hierarchy.levels if isinstance(hierarchy, MeshHierarchy) else list(hierarchy)
    markings = list(markings)
    if not markings:
        raise ValueError("empty markings history")
    if len(levels) != len(markings) + 1:
        raise ValueError("need one marking per refinement step")
    total_marked = sum(len(m) for m in markings)
    if total_marked == 0:
        raise ValueError("markings are all empty")
    return (levels[-1].n_triangles - levels[0].n_triangles) / total_marked


def write_text(mesh: Mesh, target) -> None:
    """Write a mesh in the plain-text exchange format.

    Layout: ``vertices N`` then N lines ``x y`` (17 significant digits),
    ``triangles M`` then M lines ``i j k`` (refinement edge opposite vertex
    i), ``boundary B`` then B lines ``i j D|N``.  Indices are 0-based.
    """
    def _dump(f):
        f.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        f.write(f"triangles {mesh.n_triangles}\n")
        for i, j, k in mesh.triangles:
            f.write(f"{i} {j} {k}\n")
        f.write(f"boundary {len(mesh.boundary_edges)}\n")
        for (i, j), marker in zip(mesh.boundary_edges, mesh.boundary_markers):
            f.write(f"{i} {j} {_MARKER_TO_CHAR[int(marker)]}\n")

    if hasattr(target, "write"):
        _dump(target)
    else:
        with open(target, "w") as f:
            _dump(f)


def read_text(source) -> Mesh:
    """Read a mesh written by `write_text`; returns a level-0 mesh."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as f:
            lines = f.read().splitlines()
    pos = 0

    def _section(name):
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise ValueError(f"missing '{name}' section")
        head = lines[pos].split()
        if len(head) != 2 or head[0] != name:
            raise ValueError(f"expected '{name} N' header, got {lines[pos]!r}")
        pos += 1
        return int(head[1])

    def _rows(count):
        nonlocal pos
        out = []
        for _ in range(count):
            while pos < len(lines) and not lines[pos].strip():
                pos += 1
            if pos >= len(lines):
                raise ValueError("truncated mesh file")
            out.append(lines[pos].split())
            pos += 1
        return out

    n_v = _section("vertices")
    verts = np.array([[float(a), float(b)] for a, b in _rows(n_v)], dtype=float).reshape(-1, 2)
    n_t = _section("triangles")
    tris = np.array([[int(a), int(b), int(c)] for a, b, c in _rows(n_t)],
                    dtype=np.int64).reshape(-1, 3)
    n_b = _section("boundary")
    bedges, bmarks = [], []
    for i, j, mk in _rows(n_b):
        if mk not in _CHAR_TO_MARKER:
            raise ValueError(f"unknown boundary marker {mk!r}")
        bedges.append((int(i), int(j)))
        bmarks.append(_CHAR_TO_MARKER[mk])
    return Mesh(verts, tris, np.array(bedges, dtype=np.int64).reshape(-1, 2),
                np.array(bmarks, dtype=np.int64))
