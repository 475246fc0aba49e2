"""P1 finite element solver for the anisotropic quasilinear equation.

Minimizes the discrete energy

    I_h(u) = sum_T |T| [ B(H(grad u|_T)) - F(u(x_T)) ],    F' = f,

over piecewise-linear fields with Dirichlet boundary data, using damped
Newton with Armijo backtracking.  The source is lagged inside the tangent
(Picard on f, Newton on the principal part), which keeps every tangent
matrix symmetric positive definite; the residual is still the exact energy
gradient, so the Newton direction is a descent direction for the energy
that gets recorded.  Near-critical elements (|grad u| < eps_grad) get the
gradient nudged off the singularity and their elementwise tensor floored
to C1_est (k + eps_grad)^(p-2) I; elsewhere the structural lower bound
keeps the tensor positive definite on its own.  Tangent systems go to
conjugate gradients with Jacobi preconditioning; if CG stalls or returns
an ascent direction the step falls back to preconditioned steepest
descent.  The initial iterate solves the Euclidean p = 2 problem.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from .errors import NonconvergenceError
from .fields import ScalarField
from .material import check_source_signs, check_structural_bounds, linearized_tensor


@dataclasses.dataclass
class SolveOptions:
    tol_solve: float = 1e-8        # residual <= tol_solve * (1 + |I_h(u)|)
    max_iter: int = 100
    eps_grad: float = 1e-10        # near-critical gradient threshold
    cg_rtol: float = 1e-12
    max_backtracks: int = 40
    armijo_c1: float = 1e-4
    admissibility_samples: int = 2048
    seed: int = 0


@dataclasses.dataclass
class SolveReport:
    iterations: int
    energy_history: list
    final_residual: float
    min_u: float
    critical_fraction: float
    converged: bool
    h: float
    n_vertices: int
    n_triangles: int

    def to_dict(self):
        return dataclasses.asdict(self)


class _Primitive:
    """F(s) = int_0^s f, tabulated on a growing grid.

    f is only assumed on [0, inf); trial line-search states may dip
    slightly negative, where f is frozen at f(0) (so F is linear there).
    """

    def __init__(self, f, s_hi=1.0):
        self._f = f
        self._f0 = float(np.asarray(f(np.zeros(1)))[0])
        self._build(max(1.0, s_hi))

    def _build(self, s_hi):
        self._hi = s_hi
        self._grid = np.linspace(0.0, s_hi, 8193)
        fv = np.asarray(self._f(self._grid), dtype=float)
        vals = cumulative_simpson(fv, x=self._grid, initial=0.0)
        # C1 interpolant whose slope equals f at the nodes, so the energy it
        # induces is consistent with the analytic gradient used for residuals.
        self._spline = CubicHermiteSpline(self._grid, vals, fv)
        self._top = vals[-1]
        self._fhi = fv[-1]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        top = s.max() if s.size else 0.0
        if top > self._hi:
            self._build(2.0 * top)
        out = self._spline(np.clip(s, 0.0, self._hi))
        out = np.where(s < 0.0, s * self._f0, out)
        out = np.where(s > self._hi, self._top + (s - self._hi) * self._fhi, out)
        return out


def _boundary_values(mesh, bc):
    bvs = mesh.boundary_vertices
    if callable(bc):
        return np.asarray(bc(mesh.vertices[bvs]), dtype=float).reshape(len(bvs))
    arr = np.asarray(bc, dtype=float)
    if arr.ndim == 0:
        return np.full(len(bvs), float(arr))
    if arr.shape != (len(bvs),):
        raise ValueError("boundary data must be scalar, callable, or one value "
                         "per boundary vertex")
    return arr


def _assemble(mesh, cell_tensors):
    """Stiffness matrix sum_T |T| grad phi_a . M_T grad phi_b."""
    ke = np.einsum("t,tad,tde,tbe->tab", mesh.areas, mesh.basis_grads,
                   cell_tensors, mesh.basis_grads)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _floor_spd(mats, floor):
    """Clamp the minimum eigenvalue of symmetric 2x2 blocks to floor."""
    a, b, c = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 1]
    lam_min = 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b ** 2)
    bump = np.maximum(0.0, floor - lam_min)
    out = mats.copy()
    out[:, 0, 0] += bump
    out[:, 1, 1] += bump
    return out


def _cg_solve(k_mat, rhs, rtol):
    precond = sp.diags(1.0 / k_mat.diagonal())
    x, info = spla.cg(k_mat, rhs, rtol=rtol, atol=0.0, M=precond)
    return x, info


class _EnergyProblem:
    def __init__(self, mesh, material, norm, source, options):
        self.mesh = mesh
        self.material = material
        self.norm = norm
        self.source = source
        self.opts = options
        self.primitive = _Primitive(source.f_vals)

    def grads(self, values):
        return np.einsum("tv,tvd->td", values[self.mesh.triangles], self.mesh.basis_grads)

    def cell_means(self, values):
        return values[self.mesh.triangles].mean(axis=1)

    def energy(self, values):
        g = self.grads(values)
        hn = self.norm.eval(g)
        dens = self.material.b(hn) - self.primitive(self.cell_means(values))
        return float((self.mesh.areas * dens).sum())

    def residual(self, values):
        """Gradient of the energy with respect to vertex values (full)."""
        mesh = self.mesh
        g = self.grads(values)
        gnorm = np.linalg.norm(g, axis=1)
        flux = np.zeros_like(g)
        nz = gnorm > 0.0
        if np.any(nz):
            hn = self.norm.eval(g[nz])
            flux[nz] = np.atleast_1d(self.material.b_prime(hn))[:, None] * self.norm.grad(g[nz])
        fbar = self.source.f_vals(self.cell_means(values))
        r = np.zeros(mesh.n_vertices)
        contrib = mesh.areas[:, None] * np.einsum("td,tvd->tv", flux, mesh.basis_grads)
        contrib -= (mesh.areas * fbar / 3.0)[:, None]
        np.add.at(r, mesh.triangles.ravel(), contrib.ravel())
        return r

    def tangent(self, values, c1_floor):
        g = self.grads(values)
        gnorm = np.linalg.norm(g, axis=1)
        small = gnorm < self.opts.eps_grad
        xi = g.copy()
        xi[small, 0] += self.opts.eps_grad
        mats = linearized_tensor(self.material, self.norm, xi)
        mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
        if np.any(small):
            floor = c1_floor * (self.material.k + self.opts.eps_grad) ** (self.material.p - 2.0)
            mats[small] = _floor_spd(mats[small], floor)
        return _assemble(self.mesh, mats)


def solve(mesh, material, norm, source, bc=0.0, options=None):
    """Solve the Dirichlet problem on the mesh.

    Returns (field, report).  Raises AdmissibilityError for inadmissible
    inputs and NonconvergenceError (carrying the last iterate) when the
    iteration fails; the caller can still write partial artifacts from it.
    """
    opts = options or SolveOptions()
    if norm.dim != 2:
        raise ValueError("the 2D solver needs a planar norm")

    c1_est, _ = check_structural_bounds(
        material, norm, n_samples=opts.admissibility_samples, seed=opts.seed)
    check_source_signs(source)

    problem = _EnergyProblem(mesh, material, norm, source, opts)
    interior = mesh.interior_mask
    bvals = _boundary_values(mesh, bc)

    values = np.zeros(mesh.n_vertices)
    values[mesh.boundary_vertices] = bvals
    eye = np.tile(np.eye(2), (mesh.n_triangles, 1, 1))
    k0 = _assemble(mesh, eye)
    fbar = source.f_vals(problem.cell_means(values))
    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, mesh.triangles.ravel(), np.repeat(mesh.areas * fbar / 3.0, 3))
    rhs_i = rhs[interior] - k0[interior][:, ~interior] @ values[~interior]
    init, info = _cg_solve(k0[interior][:, interior], rhs_i, opts.cg_rtol)
    if info == 0:
        values[interior] = init

    energy = problem.energy(values)
    history = [energy]
    converged = False
    iterations = 0
    final_residual = np.inf

    for _ in range(opts.max_iter):
        r_full = problem.residual(values)
        r = r_full[interior]
        final_residual = float(np.linalg.norm(r))
        if final_residual <= opts.tol_solve * (1.0 + abs(energy)):
            converged = True
            break

        k_mat = problem.tangent(values, c1_est)
        kii = k_mat[interior][:, interior]
        step, info = _cg_solve(kii, -r, opts.cg_rtol)
        directions = []
        if info == 0 and float(r @ step) < 0.0:
            directions.append(step)
        directions.append(-r / kii.diagonal())  # preconditioned descent fallback

        accepted = False
        for d in directions:
            slope = float(r @ d)
            if slope >= 0.0:
                continue
            alpha = 1.0
            trial = values.copy()
            for _ in range(opts.max_backtracks):
                trial[interior] = values[interior] + alpha * d
                e_trial = problem.energy(trial)
                if e_trial <= energy + opts.armijo_c1 * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if accepted:
                values = trial
                energy = e_trial
                history.append(energy)
                iterations += 1
                break
        if not accepted:
            field = ScalarField(mesh, values)
            report = _make_report(problem, values, iterations, history,
                                  final_residual, converged=False)
            raise NonconvergenceError(
                f"line search failed after {iterations} accepted steps "
                f"(residual {final_residual:.3e})", last_iterate=field, report=report)

    field = ScalarField(mesh, values)
    report = _make_report(problem, values, iterations, history, final_residual, converged)
    if not converged:
        raise NonconvergenceError(
            f"no convergence in {opts.max_iter} iterations "
            f"(residual {final_residual:.3e})", last_iterate=field, report=report)
    return field, report


def _make_report(problem, values, iterations, history, final_residual, converged):
    g = problem.grads(values)
    gnorm = np.linalg.norm(g, axis=1)
    frac = float(np.count_nonzero(gnorm < problem.opts.eps_grad) / len(gnorm))
    return SolveReport(
        iterations=iterations,
        energy_history=[float(e) for e in history],
        final_residual=final_residual,
        min_u=float(values.min()),
        critical_fraction=frac,
        converged=converged,
        h=problem.mesh.h,
        n_vertices=problem.mesh.n_vertices,
        n_triangles=problem.mesh.n_triangles,
    )
