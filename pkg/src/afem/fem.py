"""Lowest-order conforming finite elements on triangle meshes.

Assembly of the Laplace stiffness matrix, of load vectors with volume and
Neumann data, and of the nonlinear operator application, plus energy norm,
energy functional, prolongation between nested meshes, and the energy-norm
distance to a known gradient field.  Functions are piecewise affine and
vanish on the Dirichlet boundary; coefficient vectors run over the free
(non-Dirichlet) vertices only.

Volume integrands are approximated with the symmetric 7-point rule of
degree 5, edge integrands with 3-point Gauss, everywhere a data or
nonlinear integrand appears; polynomial integrands are thereby exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np
import scipy.sparse as sp

from .mesh import DIRICHLET, Mesh
from .nonlinearity import Nonlinearity

_A5 = (6.0 + np.sqrt(15.0)) / 21.0
_B5 = (6.0 - np.sqrt(15.0)) / 21.0
_WA = (155.0 + np.sqrt(15.0)) / 1200.0
_WB = (155.0 - np.sqrt(15.0)) / 1200.0
# degree-5 rule: barycentric nodes and weights normalized to sum 1
TRI_QUAD_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A5, _A5, 1 - 2 * _A5],
    [_A5, 1 - 2 * _A5, _A5],
    [1 - 2 * _A5, _A5, _A5],
    [_B5, _B5, 1 - 2 * _B5],
    [_B5, 1 - 2 * _B5, _B5],
    [1 - 2 * _B5, _B5, _B5],
])
TRI_QUAD_W = np.array([9 / 40, _WA, _WA, _WA, _WB, _WB, _WB])

_G3 = 0.5 * np.sqrt(3.0 / 5.0)
EDGE_QUAD_X = np.array([0.5 - _G3, 0.5, 0.5 + _G3])  # on the unit interval
EDGE_QUAD_W = np.array([5 / 18, 8 / 18, 5 / 18])

_GRAD_CACHE: "WeakKeyDictionary[Mesh, np.ndarray]" = WeakKeyDictionary()


def hat_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three nodal basis functions per triangle, (nT, 3, 2).

    Cached per mesh; long-running drivers evict with `evict_cache`.
    """
    g = _GRAD_CACHE.get(mesh)
    if g is None:
        p = mesh.vertices[mesh.triangles]
        det = 2.0 * mesh.areas
        g = np.empty((mesh.n_triangles, 3, 2))
        for i in range(3):
            e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
            g[:, i, 0] = -e[:, 1] / det
            g[:, i, 1] = e[:, 0] / det
        g.setflags(write=False)
        _GRAD_CACHE[mesh] = g
    return g


def evict_cache(mesh: Mesh) -> None:
    """Drop cached geometry for a mesh that left the hot path."""
    _GRAD_CACHE.pop(mesh, None)
    mesh.__dict__.pop("edges", None)


def triangle_quad_points(mesh: Mesh) -> np.ndarray:
    """Physical coordinates of the volume quadrature nodes, (nT, 7, 2)."""
    return np.einsum("qi,tid->tqd", TRI_QUAD_BARY, mesh.vertices[mesh.triangles])


@dataclass(frozen=True)
class DofMap:
    """Numbering of the free (non-Dirichlet) vertices."""

    mesh: Mesh
    free_vertices: np.ndarray
    dof_of_vertex: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "DofMap":
        constrained = mesh.dirichlet_vertices()
        free = np.setdiff1d(np.arange(mesh.n_vertices, dtype=np.int64), constrained)
        dof = np.full(mesh.n_vertices, -1, dtype=np.int64)
        dof[free] = np.arange(free.size)
        dof.setflags(write=False)
        free.setflags(write=False)
        return cls(mesh=mesh, free_vertices=free, dof_of_vertex=dof)

    @property
    def n_dofs(self) -> int:
        return self.free_vertices.size


@dataclass
class FeFunction:
    """Piecewise affine function, zero on the Dirichlet boundary."""

    dofmap: DofMap
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if self.coeffs.size != self.dofmap.n_dofs:
            raise ValueError("coefficient count does not match the free vertex count")
        if self.coeffs.size and not np.isfinite(self.coeffs).all():
            raise ValueError("non-finite coefficient")

    @property
    def mesh(self) -> Mesh:
        return self.dofmap.mesh

    @classmethod
    def zero(cls, dofmap: DofMap) -> "FeFunction":
        return cls(dofmap, np.zeros(dofmap.n_dofs))

    @classmethod
    def from_vertex_values(cls, dofmap: DofMap, values) -> "FeFunction":
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(dofmap, values[dofmap.free_vertices])

    def vertex_values(self) -> np.ndarray:
        v = np.zeros(self.mesh.n_vertices)
        v[self.dofmap.free_vertices] = self.coeffs
        return v

    def copy(self) -> "FeFunction":
        return FeFunction(self.dofmap, self.coeffs.copy())


def interpolate(dofmap: DofMap, func) -> FeFunction:
    """Vertex interpolant of a callable on points (values at Dirichlet
    vertices are discarded, i.e. assumed zero)."""
    return FeFunction(dofmap, np.asarray(func(dofmap.mesh.vertices[dofmap.free_vertices])))


def element_gradients(mesh: Mesh, vertex_values: np.ndarray) -> np.ndarray:
    """Per-triangle gradient of a P1 function given by vertex values."""
    return np.einsum("ti,tid->td", vertex_values[mesh.triangles], hat_gradients(mesh))


def assemble_laplacian(dofmap: DofMap) -> sp.csr_matrix:
    """Stiffness matrix of the Laplacian on the free vertices (CSR, SPD)."""
    mesh = dofmap.mesh
    g = hat_gradients(mesh)
    k = np.einsum("tid,tjd,t->tij", g, g, mesh.areas)
    dofs = dofmap.dof_of_vertex[mesh.triangles]
    rows = np.repeat(dofs[:, :, None], 3, axis=2)
    cols = np.repeat(dofs[:, None, :], 3, axis=1)
    keep = (rows >= 0) & (cols >= 0)
    a = sp.coo_matrix((k[keep], (rows[keep], cols[keep])),
                      shape=(dofmap.n_dofs, dofmap.n_dofs))
    return a.tocsr()


def stiffness_diagonal(dofmap: DofMap) -> np.ndarray:
    """Diagonal of the Laplace stiffness matrix, without full assembly."""
    mesh = dofmap.mesh
    g = hat_gradients(mesh)
    contrib = (g ** 2).sum(axis=2) * mesh.areas[:, None]
    diag_v = np.bincount(mesh.triangles.ravel(), weights=contrib.ravel(),
                         minlength=mesh.n_vertices)
    return diag_v[dofmap.free_vertices]


def _mu_elementwise(nl: Nonlinearity, mesh: Mesh, t: np.ndarray) -> np.ndarray:
    """Element averages of mu(x, t_T); exact single evaluation when mu does
    not depend on x, degree-5 quadrature in x otherwise."""
    if not nl.x_dependent:
        return np.asarray(nl.mu(None, t))
    xq = triangle_quad_points(mesh)
    return np.einsum("q,tq->t", TRI_QUAD_W, np.asarray(nl.mu(xq, t[:, None])))


def apply_nonlinear(nl: Nonlinearity, w: FeFunction) -> np.ndarray:
    """Vector of <mu(|grad w|^2) grad w, grad phi_i> over the free vertices."""
    mesh = w.mesh
    g = hat_gradients(mesh)
    grads = element_gradients(mesh, w.vertex_values())
    t = (grads ** 2).sum(axis=1)
    mu = _mu_elementwise(nl, mesh, t)
    contrib = np.einsum("t,tid,td->ti", mu * mesh.areas, g, grads)
    r = np.bincount(mesh.triangles.ravel(), weights=contrib.ravel(),
                    minlength=mesh.n_vertices)
    return r[w.dofmap.free_vertices]


def neumann_edges(mesh: Mesh):
    """Neumann boundary segments with outward unit normals.

    Returns (endpoints (nN,2), lengths, normals) or None if there are none.
    """
    sel = mesh.boundary_markers != DIRICHLET
    if not sel.any():
        return None
    edges = mesh.boundary_edges[sel]
    et = mesh.edges
    ids = et.lookup(edges, mesh.n_vertices)
    owner = et.incident[ids, 0]
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    tang = b - a
    lengths = np.linalg.norm(tang, axis=1)
    normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / lengths[:, None]
    # orient away from the owning triangle
    outward = ((a + b) / 2 - mesh.centroids()[owner])
    flip = (normals * outward).sum(axis=1) < 0
    normals[flip] *= -1.0
    return edges, lengths, normals, owner


def assemble_rhs(dofmap: DofMap, f, g=None) -> np.ndarray:
    """Load vector: volume data ``f(points)`` plus Neumann data
    ``g(points, normals)`` integrated against the nodal basis.

    ``f`` maps (..., 2) point arrays to values; ``g`` additionally receives
    the outward unit normal (broadcast per edge) and is ignored when the
    mesh has no Neumann edges.
    """
    mesh = dofmap.mesh
    rhs_v = np.zeros(mesh.n_vertices)
    if f is not None:
        xq = triangle_quad_points(mesh)
        fq = np.asarray(f(xq))
        contrib = np.einsum("tq,q,qi,t->ti", fq, TRI_QUAD_W, TRI_QUAD_BARY, mesh.areas)
        rhs_v += np.bincount(mesh.triangles.ravel(), weights=contrib.ravel(),
                             minlength=mesh.n_vertices)
    neumann = neumann_edges(mesh)
    if neumann is not None and g is not None:
        edges, lengths, normals, _ = neumann
        a = mesh.vertices[edges[:, 0]]
        b = mesh.vertices[edges[:, 1]]
        pts = a[:, None, :] + EDGE_QUAD_X[None, :, None] * (b - a)[:, None, :]
        gq = np.asarray(g(pts, normals[:, None, :]))
        w0 = lengths * np.einsum("q,nq->n", EDGE_QUAD_W * (1.0 - EDGE_QUAD_X), gq)
        w1 = lengths * np.einsum("q,nq->n", EDGE_QUAD_W * EDGE_QUAD_X, gq)
        np.add.at(rhs_v, edges[:, 0], w0)
        np.add.at(rhs_v, edges[:, 1], w1)
    return rhs_v[dofmap.free_vertices]


def energy_norm(v: FeFunction, operator: sp.csr_matrix | None = None) -> float:
    """H^1 seminorm ||grad v||; uses the assembled stiffness when given."""
    if operator is not None:
        return float(np.sqrt(max(v.coeffs @ (operator @ v.coeffs), 0.0)))
    grads = element_gradients(v.mesh, v.vertex_values())
    return float(np.sqrt(((grads ** 2).sum(axis=1) * v.mesh.areas).sum()))


def energy_functional(nl: Nonlinearity, v: FeFunction, rhs: np.ndarray) -> float:
    """E(v) = sum_T |T| M(|grad v|_T^2) / 2 - F(v) with M the antiderivative
    of mu; minimized exactly by the discrete solution."""
    if nl.antiderivative is None:
        raise ValueError("nonlinearity has no antiderivative")
    if nl.x_dependent:
        raise NotImplementedError("energy functional requires x-independent mu")
    mesh = v.mesh
    grads = element_gradients(mesh, v.vertex_values())
    t = (grads ** 2).sum(axis=1)
    return float(0.5 * (np.asarray(nl.antiderivative(t)) * mesh.areas).sum()
                 - rhs @ v.coeffs)


def prolongate(coarse: FeFunction, fine_dofmap: DofMap) -> FeFunction:
    """Exact re-representation on a one-level refinement (energy norm and
    pointwise values are preserved)."""
    fine = fine_dofmap.mesh
    cmesh = coarse.mesh
    if fine.vertex_parents is None or fine.n_coarse_vertices != cmesh.n_vertices:
        raise ValueError("target mesh is not a one-level refinement of the source mesh")
    vals = np.empty(fine.n_vertices)
    vals[:cmesh.n_vertices] = coarse.vertex_values()
    vals[cmesh.n_vertices:] = vals[fine.vertex_parents].mean(axis=1) \
        if fine.vertex_parents.size else 0.0
    return FeFunction.from_vertex_values(fine_dofmap, vals)


def energy_error_vs_exact(v: FeFunction, grad_exact) -> float:
    """||grad u - grad v|| for a known gradient field, by element quadrature.

    ``grad_exact`` maps (..., 2) points to (..., 2) gradients.
    """
    mesh = v.mesh
    xq = triangle_quad_points(mesh)
    ge = np.asarray(grad_exact(xq))
    gv = element_gradients(mesh, v.vertex_values())
    diff = ge - gv[:, None, :]
    err2 = np.einsum("tq,q,t->", (diff ** 2).sum(axis=2), TRI_QUAD_W, mesh.areas)
    return float(np.sqrt(max(err2, 0.0)))
