"""Residual a posteriori error estimator and Doerfler marking.

For a discrete function v the indicator of triangle T is

    eta(T)^2 = |T| ||f + div(mu(|grad v|^2) grad v)||_{L2(T)}^2
             + |T|^(1/2) ||jump of mu(|grad v|^2) grad v . n||_{L2(inner edges of T)}^2
             + |T|^(1/2) ||g - mu(|grad v|^2) grad v . n||_{L2(Neumann edges of T)}^2

For piecewise affine v and x-independent mu the divergence vanishes and the
flux is constant per element, so the volume term reduces to the f integral
and edge terms are exact.  The Neumann mismatch term can be switched off.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fem import (EDGE_QUAD_W, EDGE_QUAD_X, TRI_QUAD_W, element_gradients,
                  hat_gradients, triangle_quad_points, FeFunction, neumann_edges)
from .mesh import Mesh
from .nonlinearity import Nonlinearity


@dataclass(frozen=True)
class IndicatorField:
    """Per-triangle indicators eta(T) on a fixed mesh."""

    mesh: Mesh
    squared: np.ndarray

    def __post_init__(self):
        sq = np.asarray(self.squared, dtype=float).reshape(-1)
        if sq.shape[0] != self.mesh.n_triangles:
            raise ValueError("need one squared indicator per triangle")
        if sq.size and sq.min() < 0.0:
            raise ValueError("squared indicators must be nonnegative")
        sq.setflags(write=False)
        object.__setattr__(self, "squared", sq)

    @property
    def values(self) -> np.ndarray:
        return np.sqrt(self.squared)

    @cached_property
    def total(self) -> float:
        """sqrt of the sum of squared indicators."""
        return float(np.sqrt(self.squared.sum()))


def total(field: IndicatorField, subset=None) -> float:
    """Estimator total over a triangle subset (all triangles by default)."""
    if subset is None:
        return field.total
    subset = np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset,
                        dtype=np.int64)
    return float(np.sqrt(field.squared[subset].sum())) if subset.size else 0.0


class EstimatorData:
    """Mesh- and data-dependent precomputations for indicator evaluation.

    Everything that does not depend on the argument function is computed
    once: interior edge topology and normals, the volume data integral
    per element, and the Neumann data moments per edge.  `eval_squared`
    then costs a handful of vectorized passes.
    """

    def __init__(self, mesh: Mesh, f, g=None, include_neumann: bool = True):
        self.mesh = mesh
        self.include_neumann = include_neumann
        et = mesh.edges
        interior = ~et.is_boundary
        nodes = et.nodes[interior]
        self.ie_left = et.incident[interior, 0]
        self.ie_right = et.incident[interior, 1]
        tang = mesh.vertices[nodes[:, 1]] - mesh.vertices[nodes[:, 0]]
        self.ie_length = np.linalg.norm(tang, axis=1)
        self.ie_normal = np.column_stack([tang[:, 1], -tang[:, 0]]) / self.ie_length[:, None]

        if f is not None:
            xq = triangle_quad_points(mesh)
            fq = np.asarray(f(xq))
            self.f_sq_int = np.einsum("tq,q,t->t", fq ** 2, TRI_QUAD_W, mesh.areas)
        else:
            self.f_sq_int = np.zeros(mesh.n_triangles)

        self.neumann = None
        if include_neumann:
            ne = neumann_edges(mesh)
            if ne is not None:
                edges, lengths, normals, owner = ne
                a = mesh.vertices[edges[:, 0]]
                b = mesh.vertices[edges[:, 1]]
                if g is None:
                    gq = np.zeros((len(edges), EDGE_QUAD_X.size))
                else:
                    pts = a[:, None, :] + EDGE_QUAD_X[None, :, None] * (b - a)[:, None, :]
                    gq = np.asarray(g(pts, normals[:, None, :]))
                g_sq_int = lengths * np.einsum("q,nq->n", EDGE_QUAD_W, gq ** 2)
                g_int = lengths * np.einsum("q,nq->n", EDGE_QUAD_W, gq)
                self.neumann = (owner, lengths, normals, g_sq_int, g_int)

        self.sqrt_areas = np.sqrt(mesh.areas)

    def eval_squared(self, nl: Nonlinearity, vertex_values: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        grads = element_gradients(mesh, vertex_values)
        t = (grads ** 2).sum(axis=1)
        if nl.x_dependent:
            mu = np.asarray(nl.mu(mesh.centroids(), t))
        else:
            mu = np.asarray(nl.mu(None, t))
        flux = mu[:, None] * grads

        edge_sq = np.zeros(mesh.n_triangles)
        if self.ie_left.size:
            jump = ((flux[self.ie_left] - flux[self.ie_right]) * self.ie_normal).sum(axis=1)
            contrib = jump ** 2 * self.ie_length
            edge_sq += np.bincount(self.ie_left, weights=contrib, minlength=mesh.n_triangles)
            edge_sq += np.bincount(self.ie_right, weights=contrib, minlength=mesh.n_triangles)
        if self.neumann is not None:
            owner, lengths, normals, g_sq_int, g_int = self.neumann
            c = (flux[owner] * normals).sum(axis=1)
            mismatch = g_sq_int - 2.0 * c * g_int + c ** 2 * lengths
            edge_sq += np.bincount(owner, weights=np.maximum(mismatch, 0.0),
                                   minlength=mesh.n_triangles)
        return mesh.areas * self.f_sq_int + self.sqrt_areas * edge_sq


def indicators(nl: Nonlinearity, f, g, v: FeFunction,
               include_neumann: bool = True) -> IndicatorField:
    """Residual indicators of v for data (f, g); see the module docstring."""
    data = EstimatorData(v.mesh, f, g, include_neumann=include_neumann)
    return IndicatorField(v.mesh, data.eval_squared(nl, v.vertex_values()))


def doerfler_mark(field: IndicatorField, theta: float) -> np.ndarray:
    """Smallest set M with theta^2 * eta^2 <= sum of eta(T)^2 over M.

    Greedy by decreasing squared indicator, ties broken by triangle index;
    the returned indices are sorted ascending.  theta = 1 marks all
    triangles with positive indicator.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    sq = field.squared
    order = np.argsort(-sq, kind="stable")
    csum = np.cumsum(sq[order])
    total_sq = csum[-1] if csum.size else 0.0
    if total_sq <= 0.0:
        raise ValueError("estimator is zero; nothing to mark")
    target = theta * theta * total_sq
    count = int(np.searchsorted(csum, target)) + 1
    count = min(count, len(order))
    return np.sort(order[:count])
