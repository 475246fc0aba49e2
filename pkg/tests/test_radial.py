import math

import numpy as np
import pytest

from finslerpde import (DomainSpec, MaterialProfile, NumericError, RadialProblem,
                        build_domain, evaluate, hopf_margin, lift, ode_residual,
                        shoot)
from conftest import const_source


@pytest.fixture(scope="module")
def barrier_p2(euclid):
    prob = RadialProblem(material=MaterialProfile(p=2.0),
                         source=const_source(), radius=1.0, mode="barrier")
    return prob, shoot(prob, target_m=0.1)


@pytest.fixture(scope="module")
def ball_p2(euclid, unit_source):
    prob = RadialProblem(material=MaterialProfile(p=2.0),
                         source=unit_source, radius=1.0, mode="ball")
    return prob, shoot(prob, target_m=0.0)


class TestBarrier:
    def test_shoot_slope_matches_closed_form(self, barrier_p2):
        # with B(t) = t^2/2, g = m, target m: w(rho) = m*ln(R/(R-rho))/ln 2
        _, prof = barrier_p2
        assert prof.shoot_slope == pytest.approx(0.1 / math.log(2.0), abs=1e-6)

    def test_curve_matches_closed_form(self, barrier_p2):
        _, prof = barrier_p2
        rho = prof.grid[:-1]
        exact = 0.1 * np.log(1.0 / (1.0 - rho)) / math.log(2.0)
        assert np.abs(prof.w[:-1] - exact).max() < 1e-10

    def test_profile_increasing(self, barrier_p2):
        _, prof = barrier_p2
        assert prof.w[0] == 0.0
        assert np.all(np.diff(prof.w) > 0.0)
        assert np.all(prof.w_prime > 0.0)

    def test_flux_conservation(self, euclid):
        # q*Phi(w') - int q*g must be constant along the trajectory
        prob = RadialProblem(material=MaterialProfile(p=2.0),
                             source=const_source(g=0.2), radius=1.0, mode="barrier")
        from finslerpde.radial import integrate
        prof = integrate(prob, 0.3)
        q = (1.0 - prof.grid)
        flux = q * prob.material.b_prime(prof.w_prime)
        load = np.concatenate([[0.0], np.cumsum(
            0.5 * np.diff(prof.grid) * (0.2 * q[:-1] + 0.2 * q[1:]))])
        c = flux - load
        assert np.ptp(c) <= 1e-8 * max(1.0, np.abs(c).max())

    def test_ode_residual_small(self, barrier_p2):
        prob, prof = barrier_p2
        res = ode_residual(prof, prob)
        assert res <= 1e-6 * 0.1 + 1e-10

    def test_shooting_monotone_in_slope(self, euclid):
        prob = RadialProblem(material=MaterialProfile(p=3.0),
                             source=const_source(g=0.2), radius=1.0, mode="barrier")
        ends = []
        from finslerpde.radial import integrate
        for s in (0.05, 0.1, 0.2):
            ends.append(integrate(prob, s).w[-1])
        assert ends[0] < ends[1] < ends[2]


class TestBall:
    def test_torsion_center(self, ball_p2):
        _, prof = ball_p2
        assert prof.central_value == pytest.approx(0.25, abs=1e-9)
        assert prof.w[-1] == pytest.approx(0.0, abs=1e-10)

    def test_torsion_edge_slope(self, ball_p2):
        _, prof = ball_p2
        assert prof.w_prime[-1] == pytest.approx(-0.5, abs=1e-6)

    def test_p3_center(self, euclid, unit_source):
        prob = RadialProblem(material=MaterialProfile(p=3.0),
                             source=unit_source, radius=1.0, mode="ball")
        prof = shoot(prob, target_m=0.0)
        exact = (2.0 / 3.0) * 2.0 ** -0.5
        assert prof.central_value == pytest.approx(exact, abs=5e-7)

    def test_three_dimensional_torsion(self, unit_source):
        prob = RadialProblem(material=MaterialProfile(p=2.0),
                             source=unit_source, radius=1.0, mode="ball", n=3)
        prof = shoot(prob, target_m=0.0)
        assert prof.central_value == pytest.approx(1.0 / 6.0, abs=1e-8)

    def test_shifted_profile_center(self, unit_source):
        # (k + t) t = rho/2 with k = 1/2 integrates to w(0) = 7/24
        prob = RadialProblem(material=MaterialProfile(p=3.0, k=0.5, kind="shifted"),
                             source=unit_source, radius=1.0, mode="ball")
        prof = shoot(prob, target_m=0.0)
        assert prof.central_value == pytest.approx(7.0 / 24.0, abs=1e-6)


class TestLift:
    def test_lift_onto_annulus(self, euclid, barrier_p2):
        _, prof = barrier_p2
        mesh = build_domain(DomainSpec(kind="annulus_wulff", radius=1.0,
                                       norm=euclid), 0.1)
        field = lift(euclid, np.zeros(2), prof, mesh)
        r = np.linalg.norm(mesh.vertices, axis=1)
        exact = 0.1 * np.log(1.0 / r) / math.log(2.0)
        assert np.abs(field.values - exact).max() < 1e-9

    def test_lift_rejects_out_of_range_points(self, euclid, barrier_p2):
        _, prof = barrier_p2
        mesh = build_domain(DomainSpec(kind="disk", radius=1.0), 0.3)
        with pytest.raises(ValueError, match="node"):
            lift(euclid, np.zeros(2), prof, mesh)

    def test_evaluate_matches_grid(self, ball_p2):
        _, prof = ball_p2
        vals = evaluate(prof, prof.grid)
        assert np.abs(vals - prof.w).max() < 1e-12


class TestHopf:
    def test_isotropic_margin(self, barrier_p2):
        _, prof = barrier_p2
        assert hopf_margin(prof) == pytest.approx(prof.shoot_slope, rel=1e-9)

    def test_anisotropic_margin(self, ellipsoidal, barrier_p2):
        _, prof = barrier_p2
        iso = hopf_margin(prof)
        aniso = hopf_margin(prof, h=ellipsoidal)
        # slowest dual-ball direction of diag(4, 1) has min |grad H_dual| = 1/2;
        # the margin samples 4096 offset angles, hence the loose tolerance
        assert aniso == pytest.approx(0.5 * iso, rel=2e-5)

    def test_requires_barrier_mode(self, ball_p2):
        _, prof = ball_p2
        with pytest.raises(ValueError, match="barrier"):
            hopf_margin(prof)


class TestShootFailure:
    def test_unreachable_target(self, euclid):
        prob = RadialProblem(material=MaterialProfile(p=2.0),
                             source=const_source(g=0.0), radius=1.0, mode="barrier")
        with pytest.raises(NumericError):
            shoot(prob, target_m=1e9, tol=1e-10)

    def test_problem_validation(self, euclid, unit_source):
        with pytest.raises(ValueError):
            RadialProblem(material=MaterialProfile(p=2.0), source=unit_source,
                          radius=-1.0)
        with pytest.raises(ValueError):
            RadialProblem(material=MaterialProfile(p=2.0), source=unit_source,
                          radius=1.0, mode="cube")
        with pytest.raises(ValueError):
            RadialProblem(material=MaterialProfile(p=2.0), source=unit_source,
                          radius=1.0, n=1)
