"""Piecewise-linear scalar fields and derivative recovery.

Gradients of P1 fields are constant per triangle and exact.  Second
derivatives are recovered per vertex by a least-squares affine fit of the
surrounding triangle gradients (patch recovery) whose 2x2 slope matrix,
symmetrized, is the Hessian estimate.  The fit runs on the 2-ring patch:
1-ring patches are too thin at boundary vertices (one-sided, so the fit
amplifies the O(h) structure of interpolant gradients by 1/h) and too
small at the 4-triangle interior vertices of the union-jack pattern.
Vertices whose widened patch is still rank-deficient fall back to
averaging the neighbours' recovered Hessians and are counted.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .mesh import Mesh2D


@dataclasses.dataclass
class ScalarField:
    """Vertex values of a P1 finite element function."""

    mesh: Mesh2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError("values must have one entry per mesh vertex")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def __call__(self, _points):
        raise NotImplementedError("pointwise evaluation not needed; use vertex values")


def recover_gradient(field):
    """Per-triangle gradients, shape (n_triangles, 2).  Exact for P1."""
    mesh = field.mesh
    return np.einsum("tv,tvd->td", field.values[mesh.triangles], mesh.basis_grads)


def nodal_gradient(field):
    """Area-weighted average of incident triangle gradients per vertex."""
    mesh = field.mesh
    g = recover_gradient(field)
    acc = np.zeros((mesh.n_vertices, 2))
    wsum = np.zeros(mesh.n_vertices)
    wg = g * mesh.areas[:, None]
    for col in range(3):
        np.add.at(acc, mesh.triangles[:, col], wg)
        np.add.at(wsum, mesh.triangles[:, col], mesh.areas)
    return acc / wsum[:, None]


def _fit_patch(centers, grads, origin):
    """LS fit grads ~ a + J (x - origin); returns J or None if deficient."""
    x = np.column_stack([np.ones(len(centers)), centers - origin])
    sol, _, rank, _ = np.linalg.lstsq(x, grads, rcond=None)
    if rank < 3:
        return None
    return sol[1:, :].T  # rows: d/dx, d/dy of each gradient component


def recover_hessian(field, with_stats=False):
    """Recovered vertex Hessians, shape (n_vertices, 2, 2), symmetric.

    With ``with_stats`` also returns the number of vertices that needed
    the averaging fallback.
    """
    mesh = field.mesh
    grads = recover_gradient(field)
    patches = mesh.vertex_patches()
    hess = np.zeros((mesh.n_vertices, 2, 2))
    needs_avg = []
    for v in range(mesh.n_vertices):
        ring = np.unique(mesh.triangles[patches[v]])
        tris = np.unique(np.concatenate([patches[u] for u in ring]))
        j = None
        if len(tris) >= 3:
            j = _fit_patch(mesh.barycenters[tris], grads[tris], mesh.vertices[v])
        if j is None:
            needs_avg.append(v)
            continue
        hess[v] = 0.5 * (j + j.T)
    for v in needs_avg:
        ring = np.setdiff1d(np.unique(mesh.triangles[patches[v]]), [v])
        good = [u for u in ring if u not in needs_avg]
        if good:
            hess[v] = hess[good].mean(axis=0)
    if with_stats:
        return hess, len(needs_avg)
    return hess


def hessian_at_barycenters(field, vertex_hessians=None):
    """Vertex Hessians averaged to triangle barycenters, (n_triangles, 2, 2)."""
    if vertex_hessians is None:
        vertex_hessians = recover_hessian(field)
    return vertex_hessians[field.mesh.triangles].mean(axis=1)


def boundary_normal_derivative(field, vertex):
    """Inner-normal derivative of the field at a boundary vertex.

    Area-weighted average of <grad u|_T, nu(v)> over triangles touching v;
    positive means the field grows walking into the domain.
    """
    mesh = field.mesh
    nu = mesh.inner_normal(vertex)
    tris = mesh.vertex_patches()[vertex]
    g = np.einsum("tv,tvd->td", field.values[mesh.triangles[tris]], mesh.basis_grads[tris])
    w = mesh.areas[tris]
    return float((g @ nu * w).sum() / w.sum())
