"""Radial reduction: shooting for profiles w of v(x) = w(rho(x)).

The anisotropic equation restricted to functions of the dual-norm
distance becomes a 1D boundary value problem

    (q(rho) Phi(w'))' = rhs(w) q(rho),    Phi(t) = B'(|t|) sign(t),

which this module integrates as a first-order system in (w, Psi) with
Psi = Phi(w') q, so that the possibly singular Phi' (p < 2) is never
differentiated.  Two modes:

* ``barrier``: q(rho) = (R - rho)^(n-1) on [0, R/2], rhs = +g.  The
  coordinate runs inward from the outer boundary (rho = R - geometric
  radius), so w(0) = 0 is the boundary value and shoot_slope = w'(0) is
  the boundary slope.  Used for Hopf and comparison checks on the
  annulus R/2 <= geometric radius <= R.
* ``ball``: q(rho) = rho^(n-1) on [0, R], rhs = -f, geometric radius.
  w decreases from its central maximum; the shooting parameter is the
  central value w(0) and the terminal condition is the boundary value.

Integration is classical 4-stage Runge-Kutta on 4096 uniform steps.
Phi is inverted in closed form for power-law profiles and by scalar
bisection otherwise.  In ball mode q(0) = 0 makes Phi^{-1}(Psi/q)
indeterminate at the center, so integration starts at rho0 = R * 1e-6
with the series value Psi(rho0) = -f(w(0)) rho0^n / n; the exact center
point (w(0), w'(0) = 0) is prepended to the returned grid.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import NumericError
from .fields import ScalarField
from .material import MaterialProfile, SourceTerm

N_STEPS = 4096
_SLOPE_MIN, _SLOPE_MAX = 1e-12, 1e6
_W_CAP = 1e12  # treat profiles beyond this as diverged (Keller-Osserman trials)
_CENTER_CUT = 1e-6  # ball mode starts at R * this


@dataclasses.dataclass
class RadialProblem:
    material: MaterialProfile
    source: SourceTerm
    radius: float
    mode: str = "barrier"
    n: int = 2

    def __post_init__(self):
        if self.mode not in ("barrier", "ball"):
            raise ValueError(f"mode must be 'barrier' or 'ball', got {self.mode!r}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.n < 2:
            raise ValueError("dimension must be at least 2")

    def q(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.mode == "barrier":
            return (self.radius - rho) ** (self.n - 1)
        return rho ** (self.n - 1)

    def span(self):
        if self.mode == "barrier":
            return 0.0, 0.5 * self.radius
        return _CENTER_CUT * self.radius, self.radius


@dataclasses.dataclass
class BarrierProfile:
    """Radial profile on an increasing rho grid.

    In barrier mode w(0) = 0, w is non-decreasing and w' > 0 in the
    interior; shoot_slope is the converged boundary slope w'(0).  In
    ball mode the same container holds the decreasing profile from the
    central maximum, with shoot_slope = w'(0) = 0 at the center.
    """

    grid: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray
    shoot_slope: float
    mode: str
    radius: float
    n: int

    @property
    def central_value(self):
        """w at the end away from the geometric boundary."""
        return float(self.w[0] if self.mode == "ball" else self.w[-1])


def _phi_inverse_scalar(material):
    """Scalar t = Phi^{-1}(y): solve B'(t) = |y|, signed."""
    p, k = material.p, material.k
    if k == 0.0:
        e = 1.0 / (p - 1.0)

        def inv(y):
            if y == 0.0:
                return 0.0
            return math.copysign(abs(y) ** e, y)
        return inv

    def inv(y):
        if y == 0.0:
            return 0.0
        ay = abs(y)
        hi = 1.0
        for _ in range(200):
            if (k + hi) ** (p - 2.0) * hi >= ay:
                break
            hi *= 2.0
        else:
            raise NumericError(f"Phi inversion failed: B'(t) never reaches {ay:.3e}")
        lo = hi
        while (k + lo) ** (p - 2.0) * lo >= ay and lo > 1e-320:
            lo *= 0.5
        # geometric bisection: relative accuracy survives tiny roots
        for _ in range(120):
            mid = math.sqrt(lo * hi)
            if (k + mid) ** (p - 2.0) * mid < ay:
                lo = mid
            else:
                hi = mid
        return math.copysign(math.sqrt(lo * hi), y)
    return inv


def _scalar_rhs(fun):
    """Wrap a vectorized source component for the scalar RK4 loop.

    Returns None when the component vanishes on a wide probe (skips all
    calls), a float-returning closure when it is constant there, and a
    per-call wrapper otherwise.  Arguments are clamped to w >= 0, the
    range on which sources are specified.
    """
    probe = np.concatenate([np.linspace(0.0, 10.0, 33),
                            np.geomspace(1e-3, 1e6, 65)])
    vals = np.asarray(fun(probe), dtype=float)
    if np.all(vals == 0.0):
        return None
    if np.all(vals == vals[0]):
        const = float(vals[0])
        return lambda w: const

    def call(w):
        return float(np.asarray(fun(np.array([w if w > 0.0 else 0.0])), dtype=float)[0])
    return call


def _march(problem, start, n_steps):
    """RK4 in (w, Psi).  Returns (w_nodes, psi_nodes) or (None, None) if
    the trajectory leaves the finite range (a diverged shooting trial)."""
    mat = problem.material
    phi_inv = _phi_inverse_scalar(mat)
    r_pow = problem.n - 1
    radius = problem.radius
    barrier = problem.mode == "barrier"
    if barrier:
        rhs = _scalar_rhs(problem.source.g_vals)
        sign = 1.0
        w0 = 0.0
        psi0 = radius ** r_pow * float(mat.b_prime(np.asarray(start, dtype=float)))
    else:
        rhs = _scalar_rhs(problem.source.f_vals)
        sign = -1.0
        rho0 = _CENTER_CUT * radius
        w0 = float(start)
        f0 = rhs(w0) if rhs is not None else 0.0
        psi0 = -f0 * rho0 ** problem.n / problem.n
    a, b = problem.span()
    step = (b - a) / n_steps

    def q_at(r):
        return (radius - r) ** r_pow if barrier else r ** r_pow

    def deriv(r, w, psi):
        dw = phi_inv(psi / q_at(r))
        dpsi = 0.0 if rhs is None else sign * rhs(w) * q_at(r)
        return dw, dpsi

    w, psi = w0, psi0
    ws = [w0]
    ps = [psi0]
    for i in range(n_steps):
        r = a + i * step
        try:
            k1w, k1p = deriv(r, w, psi)
            k2w, k2p = deriv(r + 0.5 * step, w + 0.5 * step * k1w, psi + 0.5 * step * k1p)
            k3w, k3p = deriv(r + 0.5 * step, w + 0.5 * step * k2w, psi + 0.5 * step * k2p)
            k4w, k4p = deriv(r + step, w + step * k3w, psi + step * k3p)
        except OverflowError:
            return None, None
        w += step * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        psi += step * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        if not (math.isfinite(w) and math.isfinite(psi) and abs(w) < _W_CAP):
            return None, None
        ws.append(w)
        ps.append(psi)
    return np.array(ws), np.array(ps)


def integrate(problem, start, n_steps=N_STEPS):
    """Integrate for a given shooting parameter (no terminal condition).

    In barrier mode ``start`` is the boundary slope w'(0) > 0; in ball
    mode it is the central value w(0).  Raises NumericError if the
    trajectory diverges.
    """
    ws, ps = _march(problem, start, n_steps)
    if ws is None:
        raise NumericError(f"radial profile diverged for shooting parameter {start:.6g}")
    a, b = problem.span()
    grid = np.linspace(a, b, n_steps + 1)
    qv = problem.q(grid)
    w_prime = problem.material.b_prime_inverse(np.abs(ps) / qv) * np.sign(ps)
    if problem.mode == "ball":
        grid = np.concatenate([[0.0], grid])
        ws = np.concatenate([[float(start)], ws])
        w_prime = np.concatenate([[0.0], w_prime])
    return BarrierProfile(grid=grid, w=ws, w_prime=w_prime,
                          shoot_slope=float(w_prime[0]), mode=problem.mode,
                          radius=problem.radius, n=problem.n)


def shoot(problem, target_m, tol=1e-10, n_steps=N_STEPS):
    """Find the profile hitting w(end) = target_m by monotone bisection.

    Barrier mode bisects the boundary slope (target_m > 0); ball mode
    bisects the central value (target_m >= 0, typically 0 for Dirichlet
    data).  The bracket grows geometrically from [1e-6, 1]; slopes
    outside [1e-12, 1e6] raise NumericError.
    """
    if problem.mode == "barrier" and target_m <= 0:
        raise ValueError("barrier mode needs target_m > 0")
    if problem.mode == "ball" and target_m < 0:
        raise ValueError("ball mode needs target_m >= 0")

    def hit(s):
        ws, _ = _march(problem, s, n_steps)
        return math.inf if ws is None else float(ws[-1])

    lo, hi = 1e-6, 1.0
    hit_lo, hit_hi = hit(lo), hit(hi)
    while hit_lo > target_m:
        lo *= 0.25
        if lo < _SLOPE_MIN:
            raise NumericError(
                f"shooting bracket not found: w(end) > {target_m:.6g} down to "
                f"slope {_SLOPE_MIN:.0e}")
        hit_lo = hit(lo)
    while hit_hi < target_m:
        hi *= 4.0
        if hi > _SLOPE_MAX:
            raise NumericError(
                f"shooting bracket not found: w(end) < {target_m:.6g} up to "
                f"slope {_SLOPE_MAX:.0e}")
        hit_hi = hit(hi)

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hit(mid) < target_m:
            lo = mid
        else:
            hi = mid
    profile = integrate(problem, 0.5 * (lo + hi), n_steps)
    missed = abs(float(profile.w[-1]) - target_m)
    if missed > tol:
        raise NumericError(f"shooting missed the target by {missed:.3e} (tol {tol:.1e})")
    return profile


def evaluate(profile, rho):
    """Monotone-cubic interpolation of w at radial coordinates rho."""
    interp = PchipInterpolator(profile.grid, profile.w)
    return interp(np.clip(np.asarray(rho, dtype=float),
                          profile.grid[0], profile.grid[-1]))


def _radial_coordinate(profile, h, center, points):
    dist = h.dual.eval(np.asarray(points, dtype=float) - np.asarray(center, dtype=float))
    return profile.radius - dist if profile.mode == "barrier" else dist


def lift(h, center, profile, mesh):
    """Nodal field v(x) = w(rho(x)) with rho from the dual-norm distance."""
    rho = _radial_coordinate(profile, h, center, mesh.vertices)
    tol = 1e-9 * profile.radius
    bad = (rho < profile.grid[0] - tol) | (rho > profile.grid[-1] + tol)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"mesh node {i} at ({mesh.vertices[i, 0]:.6g}, {mesh.vertices[i, 1]:.6g}) "
            f"lies outside the radial range [{profile.grid[0]:.6g}, {profile.grid[-1]:.6g}] "
            f"(rho = {rho[i]:.6g})")
    return ScalarField(mesh, evaluate(profile, rho))


def hopf_margin(profile, h=None):
    """Lower bound for the lifted field's inner-normal boundary slope.

    The lifted barrier v = w(R - H_dual(x - center)) has boundary slope
    w'(0) |grad H_dual|, so the floor is shoot_slope times the minimum
    of |grad H_dual| over boundary directions (1 for the Euclidean
    norm, h=None).  Must be positive.
    """
    if profile.mode != "barrier":
        raise ValueError("hopf_margin needs a barrier mode profile")
    factor = 1.0
    if h is not None:
        theta = (np.arange(4096) + 0.5) * (2.0 * np.pi / 4096.0)
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        factor = float(np.linalg.norm(h.dual.grad(dirs), axis=1).min())
    margin = profile.shoot_slope * factor
    if margin <= 0.0:
        raise NumericError(f"Hopf margin must be positive, got {margin:.3e}")
    return margin


def ode_residual(profile, problem):
    """Max discrepancy of d/drho [Phi(w')q] against the stored rhs."""
    qv = problem.q(profile.grid)
    mat = problem.material
    psi = mat.b_prime(np.abs(profile.w_prime)) * np.sign(profile.w_prime) * qv
    dpsi = np.gradient(psi, profile.grid, edge_order=2)
    w_clip = np.maximum(profile.w, 0.0)
    if problem.mode == "barrier":
        rhs = np.asarray(problem.source.g_vals(w_clip), dtype=float) * qv
    else:
        rhs = -np.asarray(problem.source.f_vals(w_clip), dtype=float) * qv
    return float(np.max(np.abs(dpsi - rhs)))
