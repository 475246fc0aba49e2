import math

import numpy as np
import pytest

from finslerpde import (DomainSpec, MaterialProfile, ScalarField, build_domain,
                        critical_set_fraction, hopf_check, refinement_study,
                        sample_sup_points, sobolev_scan, weight_integral,
                        weighted_hessian_integral)
from conftest import const_source


@pytest.fixture(scope="module")
def fine_torsion(torsion_study):
    return torsion_study.fields[-1]


class TestWeightedHessian:
    def test_torsion_hessian_mass(self, fine_torsion):
        # u = (1 - |x|^2)/4 has |D2u|^2 = 1/2, so the integral tends to pi/2
        val = weighted_hessian_integral(fine_torsion, MaterialProfile(p=2.0))
        assert val == pytest.approx(math.pi / 2.0, rel=0.03)

    def test_weighted_by_gradient_power(self, fine_torsion):
        # beta = 0.5 weight |x/2|^{-1/2} against 1/2 gives 4 sqrt(2) pi / 3... scaled
        val = weighted_hessian_integral(fine_torsion, MaterialProfile(p=2.0),
                                        beta=0.5)
        exact = 0.5 * 2.0 * math.pi * math.sqrt(2.0) * (2.0 / 3.0)
        assert val == pytest.approx(exact, rel=0.03)

    def test_parameter_validation(self, fine_torsion):
        mat = MaterialProfile(p=2.0)
        with pytest.raises(ValueError):
            weighted_hessian_integral(fine_torsion, mat, beta=1.0)
        with pytest.raises(ValueError):
            weighted_hessian_integral(fine_torsion, mat, beta=-0.1)
        with pytest.raises(ValueError):
            weighted_hessian_integral(fine_torsion, mat, gamma=0.5)


class TestWeightIntegral:
    def test_zeroth_power_is_area(self, fine_torsion):
        val = weight_integral(fine_torsion, MaterialProfile(p=2.0), t=0.0)
        assert val == pytest.approx(float(fine_torsion.mesh.areas.sum()), rel=1e-12)
        assert val == pytest.approx(math.pi, rel=1e-3)

    def test_half_power(self, fine_torsion):
        # int |x/2|^{-1/2} = 2 pi sqrt(2) int r^{1/2} = 4 sqrt(2) pi / 3
        val = weight_integral(fine_torsion, MaterialProfile(p=2.0), t=0.5)
        assert val == pytest.approx(4.0 * math.sqrt(2.0) * math.pi / 3.0, rel=0.03)

    def test_monotone_in_t(self, fine_torsion):
        mat = MaterialProfile(p=2.0)
        vals = [weight_integral(fine_torsion, mat, t=t)
                for t in (0.0, 0.25, 0.5, 0.75)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_t_range_enforced(self, fine_torsion):
        with pytest.raises(ValueError):
            weight_integral(fine_torsion, MaterialProfile(p=2.0), t=1.0)
        with pytest.raises(ValueError):
            weight_integral(fine_torsion, MaterialProfile(p=2.0), t=-0.5)


class TestCriticalSet:
    def test_affine_field_has_no_critical_cells(self, euclid):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.2)
        u = ScalarField(mesh, mesh.vertices[:, 0])
        assert critical_set_fraction(u, 1e-10) == 0.0

    def test_constant_field_is_all_critical(self):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.2)
        u = ScalarField(mesh, np.zeros(len(mesh.vertices)))
        assert critical_set_fraction(u, 1e-10) == pytest.approx(1.0)

    def test_shrinks_under_refinement(self, torsion_study):
        fracs = [row["critical_fraction"] for row in torsion_study.rows]
        assert all(b < a for a, b in zip(fracs, fracs[1:]))


class TestSobolev:
    def test_affine_field_integrates_to_zero(self):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.2)
        u = ScalarField(mesh, mesh.vertices[:, 0] + 2.0)
        out = dict(sobolev_scan(u, MaterialProfile(p=2.0), (1.4, 1.6)))
        assert set(out) == {1.4, 1.6}
        assert all(v == pytest.approx(0.0, abs=1e-18) for v in out.values())

    def test_torsion_second_derivative_mass(self, fine_torsion):
        # |D2u|_F = 1/sqrt 2 so the q-th power integrates to pi 2^{-q/2}
        out = dict(sobolev_scan(fine_torsion, MaterialProfile(p=2.0), (2.0,)))
        assert out[2.0] == pytest.approx(math.pi / 2.0, rel=0.03)

    def test_exponent_range(self, fine_torsion):
        with pytest.raises(ValueError):
            sobolev_scan(fine_torsion, MaterialProfile(p=2.0), (1.0,))
        with pytest.raises(ValueError):
            sobolev_scan(fine_torsion, MaterialProfile(p=2.0), (4.5,))


class TestSupSamples:
    def test_points_lie_inside(self):
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.2)
        pts = sample_sup_points(mesh, count=25)
        # 25 low-discrepancy points plus the area centroid
        assert pts.shape == (26, 2)
        assert np.all(np.linalg.norm(pts, axis=1) <= 1.0 + 1e-12)


class TestHopf:
    def test_torsion_boundary_slope(self, torsion_study):
        rep = torsion_study.hopf
        # -du/dnu = |x|/2 = 1/2 on the unit circle
        assert rep.min_normal_derivative == pytest.approx(0.5, abs=0.05)
        assert rep.barrier_margin > 0.0

    def test_comparison_nonnegative_up_to_mesh_error(self, torsion_study):
        rep = torsion_study.hopf
        h_fine = torsion_study.rows[-1]["h"]
        assert rep.comparison_violation >= -5.0 * h_fine ** 2

    def test_positivity_chain(self, torsion_study):
        # the discrete Hopf slope should dominate the analytic barrier margin
        rep = torsion_study.hopf
        h_fine = torsion_study.rows[-1]["h"]
        assert rep.min_normal_derivative >= rep.barrier_margin - 5.0 * h_fine

    def test_barrier_field_is_its_own_barrier(self, euclid):
        from finslerpde import RadialProblem, lift, shoot
        prob = RadialProblem(material=MaterialProfile(p=2.0),
                             source=const_source(), radius=0.8, mode="barrier")
        prof = shoot(prob, target_m=0.1)
        mesh = build_domain(DomainSpec(kind="annulus_wulff", radius=0.8,
                                       norm=euclid), 0.05)
        u = lift(euclid.dual, np.zeros(2), prof, mesh)
        rep = hopf_check(u, euclid, MaterialProfile(p=2.0), const_source(),
                         radius=0.8, m=0.1)
        assert rep.comparison_violation == pytest.approx(0.0, abs=1e-12)

    def test_ball_must_fit(self, euclid, torsion_study):
        u = torsion_study.fields[0]
        with pytest.raises(ValueError, match="fits"):
            hopf_check(u, euclid, MaterialProfile(p=2.0), const_source(),
                       radius=50.0, m=0.1)


class TestStudy:
    def test_row_fields(self, torsion_study):
        assert len(torsion_study.rows) == 3
        hs = [row["h"] for row in torsion_study.rows]
        assert hs[0] == pytest.approx(2.0 * hs[1], rel=1e-12)
        for row in torsion_study.rows:
            for key in ("h", "hessian_integral", "weight_integral",
                        "critical_fraction"):
                assert key in row

    def test_report_serializes(self, torsion_study):
        d = torsion_study.regularity.to_dict()
        assert d["t"] == 0.5
        assert len(d["per_refinement"]) == 3
        hd = torsion_study.hopf.to_dict()
        assert "min_normal_derivative" in hd

    def test_sup_values_bound_refinement_rows(self, torsion_study):
        reg = torsion_study.regularity
        assert reg.hessian_integral_sup > 0.0
        assert reg.weight_integral_sup > 0.0
