import numpy as np
import pytest

from finslerpde import (AdmissibilityError, DomainSpec, MaterialProfile, NonconvergenceError,
                        SolveOptions, SourceTerm, build_domain, solve)
from conftest import const_source


def center_value(field):
    i = int(np.argmin(np.linalg.norm(field.mesh.vertices, axis=1)))
    return float(field.values[i])


class TestTorsion:
    def test_central_value(self, torsion_coarse):
        field, report = torsion_coarse
        assert center_value(field) == pytest.approx(0.25, abs=5e-3)
        assert report.converged

    def test_quadratic_case_needs_no_newton_steps(self, torsion_coarse):
        _, report = torsion_coarse
        assert report.iterations == 0

    def test_energy_history_non_increasing(self, torsion_coarse, p4_study):
        for report in [torsion_coarse[1]] + p4_study.reports:
            hist = report.energy_history
            assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))

    def test_discrete_positivity(self, torsion_coarse):
        _, report = torsion_coarse
        assert report.min_u >= -1e-10

    def test_residual_criterion(self, torsion_coarse):
        _, report = torsion_coarse
        assert report.final_residual <= 1e-8 * (1.0 + abs(report.energy_history[-1]))


class TestNonlinear:
    def test_p3_matches_radial_closed_form(self, euclid, unit_source):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.05)
        field, report = solve(mesh, MaterialProfile(p=3.0), euclid, unit_source)
        exact = (2.0 / 3.0) * 2.0 ** -0.5
        assert center_value(field) == pytest.approx(exact, abs=2e-3)
        assert report.iterations > 0

    def test_singular_p(self, euclid, unit_source):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.15)
        field, report = solve(mesh, MaterialProfile(p=1.5), euclid, unit_source)
        assert report.converged and report.min_u >= -1e-10

    def test_shifted_profile(self, euclid, unit_source):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.15)
        field, report = solve(mesh, MaterialProfile(p=3.0, k=0.5, kind="shifted"),
                              euclid, unit_source)
        assert report.converged

    def test_anisotropic_torsion(self, ellipsoidal, unit_source):
        mesh = build_domain(DomainSpec(kind="wulff_ball", radius=1.0,
                                       norm=ellipsoidal), 0.1)
        field, _ = solve(mesh, MaterialProfile(p=2.0), ellipsoidal, unit_source)
        d = ellipsoidal.dual.eval(mesh.vertices)
        exact = (1.0 - d ** 2) / 4.0
        assert np.abs(field.values - exact).max() < 5e-3

    def test_nonconstant_source(self, euclid):
        src = SourceTerm(f=lambda s: 1.0 + np.asarray(s, dtype=float))
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.15)
        field, report = solve(mesh, MaterialProfile(p=2.0), euclid, src)
        assert report.converged
        # f >= 1 implies u at least the torsion solution (comparison)
        assert center_value(field) > 0.24


class TestFailureModes:
    def test_nonpositive_source_rejected(self, euclid):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.3)
        bad = SourceTerm(f=lambda s: -np.ones_like(np.asarray(s, dtype=float)))
        with pytest.raises(AdmissibilityError, match="positive"):
            solve(mesh, MaterialProfile(p=2.0), euclid, bad)

    def test_nonconvergence_carries_last_iterate(self, euclid, unit_source):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.2)
        opts = SolveOptions(max_iter=1)
        with pytest.raises(NonconvergenceError) as err:
            solve(mesh, MaterialProfile(p=3.0), euclid, unit_source, options=opts)
        assert err.value.last_iterate is not None
        assert err.value.report is not None
        assert not err.value.report.converged

    def test_boundary_data_shapes(self, euclid, unit_source):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.3)
        field, _ = solve(mesh, MaterialProfile(p=2.0), euclid, unit_source, bc=0.1)
        assert field.values[mesh.boundary_vertices] == pytest.approx(0.1)
        fun = lambda pts: pts[:, 0] * 0.0 + 0.2
        field, _ = solve(mesh, MaterialProfile(p=2.0), euclid, unit_source, bc=fun)
        assert field.values[mesh.boundary_vertices] == pytest.approx(0.2)
        with pytest.raises(ValueError):
            solve(mesh, MaterialProfile(p=2.0), euclid, unit_source,
                  bc=np.ones(3))
