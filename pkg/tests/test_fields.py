import numpy as np
import pytest

from finslerpde import (DomainSpec, Mesh2D, ScalarField, boundary_normal_derivative,
                        build_domain, hessian_at_barycenters, nodal_gradient,
                        recover_gradient, recover_hessian)


def interpolate(mesh, fun):
    return ScalarField(mesh, fun(mesh.vertices[:, 0], mesh.vertices[:, 1]))


class TestGradient:
    def test_affine_exact(self):
        mesh = build_domain(DomainSpec(kind="rectangle"), 0.3)
        field = interpolate(mesh, lambda x, y: x + 2.0 * y)
        grads = recover_gradient(field)
        assert np.allclose(grads, [1.0, 2.0], atol=1e-12)
        assert np.allclose(nodal_gradient(field), [1.0, 2.0], atol=1e-12)

    def test_quadratic_converges(self):
        errs = []
        for h in (0.2, 0.1):
            mesh = build_domain(DomainSpec(kind="disk", radius=1.0), h)
            field = interpolate(mesh, lambda x, y: x * x)
            grads = recover_gradient(field)
            exact = np.column_stack([2.0 * mesh.barycenters[:, 0],
                                     np.zeros(mesh.n_triangles)])
            errs.append(np.abs(grads - exact).max())
        assert errs[1] < 0.7 * errs[0]

    def test_values_validated(self):
        mesh = build_domain(DomainSpec(kind="rectangle"), 0.5)
        with pytest.raises(ValueError):
            ScalarField(mesh, np.ones(3))
        with pytest.raises(ValueError):
            ScalarField(mesh, np.full(mesh.n_vertices, np.nan))


class TestHessian:
    def test_affine_zero(self):
        mesh = build_domain(DomainSpec(kind="rectangle"), 0.3)
        field = interpolate(mesh, lambda x, y: x + 2.0 * y)
        assert np.abs(recover_hessian(field)).max() < 1e-10

    def test_torsion_interpolant_interior(self):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.1)
        field = interpolate(mesh, lambda x, y: (1.0 - x * x - y * y) / 4.0)
        hess = recover_hessian(field)
        interior = mesh.interior_mask.copy()
        # stay clear of the boundary layer where patches are one-sided
        interior &= np.linalg.norm(mesh.vertices, axis=1) < 0.8
        dev = np.abs(hess[interior] + 0.5 * np.eye(2)).max()
        assert dev < 0.12  # O(h) at h = 0.1

    def test_x2y_matches_analytic(self):
        mesh = build_domain(DomainSpec(kind="rectangle"), 0.1)
        field = interpolate(mesh, lambda x, y: x * x * y)
        hess = recover_hessian(field)
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        exact = np.empty((mesh.n_vertices, 2, 2))
        exact[:, 0, 0] = 2.0 * y
        exact[:, 0, 1] = exact[:, 1, 0] = 2.0 * x
        exact[:, 1, 1] = 0.0
        inner = (mesh.interior_mask & (x > 0.2) & (x < 0.8)
                 & (y > 0.2) & (y < 0.8))
        assert np.abs(hess[inner] - exact[inner]).max() < 0.2

    def test_single_triangle_falls_back(self):
        mesh = Mesh2D(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                      np.array([[0, 1, 2]]))
        field = ScalarField(mesh, np.array([0.0, 1.0, 2.0]))
        hess, fallback = recover_hessian(field, with_stats=True)
        assert fallback == 3
        assert np.all(hess == 0.0)

    def test_barycenter_average_shape(self, torsion_coarse):
        field, _ = torsion_coarse
        hb = hessian_at_barycenters(field)
        assert hb.shape == (field.mesh.n_triangles, 2, 2)
        assert np.allclose(hb, np.transpose(hb, (0, 2, 1)))


class TestBoundaryDerivative:
    def test_affine_right_edge(self):
        mesh = build_domain(DomainSpec(kind="rectangle"), 0.25)
        field = interpolate(mesh, lambda x, y: x)
        right = [v for v in mesh.boundary_vertices
                 if mesh.vertices[v, 0] == 1.0 and 0.2 < mesh.vertices[v, 1] < 0.8]
        vals = [boundary_normal_derivative(field, v) for v in right]
        assert np.allclose(vals, -1.0, atol=1e-12)

    def test_torsion_half_on_circle(self, torsion_coarse):
        field, _ = torsion_coarse
        vals = [boundary_normal_derivative(field, v)
                for v in field.mesh.boundary_vertices]
        assert np.allclose(vals, 0.5, atol=0.05)

    def test_interior_vertex_rejected(self, torsion_coarse):
        field, _ = torsion_coarse
        interior = int(np.flatnonzero(field.mesh.interior_mask)[0])
        with pytest.raises(ValueError):
            boundary_normal_derivative(field, interior)
