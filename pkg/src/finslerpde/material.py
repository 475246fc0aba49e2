"""Scalar stress profiles B and source terms, with admissibility checks.

The operator is -div(B'(H(grad u)) grad H(grad u)).  Two profile families
are shipped:

  * ``power``    B(t) = t^p / p                      (k = 0)
  * ``shifted``  B'(t) = (k + t)^(p-2) t, k in (0, 1]

Both sit inside the growth envelope of hypothesis (iii) with
gamma = min(1, p-1) and Gamma = max(1, p-1).  The checks in this module
estimate the constants that make the downstream estimates run: the
ellipticity/boundedness pair (C1, C2) of the linearized tensor

    M(xi) = B''(H(xi)) grad H (x) grad H + B'(H(xi)) D^2 H(xi),

the flux growth constant, the flux monotonicity constant, and the
Keller-Osserman admissibility of an absorption term g.  All of them are
sampled estimates, not certificates; seeds make them reproducible.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, NumericError
from .hypotheses import violation

# Verdicts for the barrier admissibility of g.
G_ZERO_NEAR_0 = "g_zero_near_0"
OSSERMAN_CHECKED = "osserman_checked"
UNCHECKED = "unchecked"

_RADIUS_RANGE = (1e-4, 1e2)   # log-uniform sampling radii for the checks
_OSSERMAN_LEVELS = 20         # dyadic halvings in the divergence probe


class MaterialProfile:
    """Profile B with exponent p > 1 and shift k in [0, 1]."""

    def __init__(self, p, k=0.0, kind="power"):
        if kind not in ("power", "shifted"):
            raise ValueError(f"unknown profile kind {kind!r}")
        if not p > 1.0:
            raise AdmissibilityError(violation("iii", f"got p = {p}"))
        if not 0.0 <= k <= 1.0:
            raise AdmissibilityError(violation("iii", f"got k = {k}, need k in [0, 1]"))
        if kind == "power" and k != 0.0:
            raise ValueError("power kind requires k = 0")
        self.p = float(p)
        self.k = float(k)
        self.kind = kind

    @property
    def gamma(self):
        return min(1.0, self.p - 1.0)

    @property
    def big_gamma(self):
        return max(1.0, self.p - 1.0)

    def __repr__(self):
        return f"MaterialProfile(p={self.p}, k={self.k}, kind={self.kind!r})"

    # B and derivatives; all accept scalars or arrays, t >= 0.

    def b(self, t):
        t = np.asarray(t, dtype=float)
        p, k = self.p, self.k
        if k == 0.0:
            out = t ** p / p
        else:
            # split (k+s)^(p-2) s = (k+s)^(p-1) - k (k+s)^(p-2) and integrate
            out = ((k + t) ** p - k ** p) / p - k * ((k + t) ** (p - 1) - k ** (p - 1)) / (p - 1)
        return float(out) if out.ndim == 0 else out

    def b_prime(self, t):
        t = np.asarray(t, dtype=float)
        if self.k == 0.0:
            # (k+t)^(p-2) t collapses to t^(p-1); avoids 0^(negative) at t = 0
            out = t ** (self.p - 1.0)
        else:
            out = (self.k + t) ** (self.p - 2.0) * t
        return float(out) if out.ndim == 0 else out

    def b_second(self, t):
        t = np.asarray(t, dtype=float)
        p, k = self.p, self.k
        if k == 0.0:
            if p < 2.0 and np.any(t == 0.0):
                raise ValueError(
                    "B'' is singular at t = 0 for p < 2 with k = 0")
            out = (p - 1.0) * t ** (p - 2.0)
        else:
            out = (k + t) ** (p - 3.0) * ((p - 1.0) * t + k)
        return float(out) if out.ndim == 0 else out

    def ell(self, s):
        """L(s) = s B'(s) - B(s), the barrier Legendre-type transform."""
        s = np.asarray(s, dtype=float)
        out = s * self.b_prime(s) - self.b(s)
        return float(out) if out.ndim == 0 else out

    def ell_inverse(self, y):
        """Inverse of the increasing function L, by monotone bisection."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 0
        vals = np.atleast_1d(y).astype(float)
        if np.any(vals < 0.0):
            raise ValueError("L is nonnegative; cannot invert a negative value")
        hi = np.ones_like(vals)
        for _ in range(400):
            todo = self.ell(hi) < vals
            if not np.any(todo):
                break
            hi[todo] *= 2.0
        else:
            raise NumericError("bracket expansion for L^{-1} failed")
        lo = np.zeros_like(vals)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            small = self.ell(mid) < vals
            lo = np.where(small, mid, lo)
            hi = np.where(small, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if single else out

    def b_prime_inverse(self, y):
        """Inverse of B' on [0, inf).

        Closed form for the pure power family; bisection otherwise (B' is
        strictly increasing by hypothesis (ii)).
        """
        y = np.asarray(y, dtype=float)
        single = y.ndim == 0
        vals = np.atleast_1d(y).astype(float)
        if np.any(vals < 0.0):
            raise ValueError("B' is nonnegative; cannot invert a negative value")
        if self.k == 0.0:
            out = vals ** (1.0 / (self.p - 1.0))
        else:
            hi = np.ones_like(vals)
            for _ in range(400):
                todo = self.b_prime(hi) < vals
                if not np.any(todo):
                    break
                hi[todo] *= 2.0
            else:
                raise NumericError("bracket expansion for (B')^{-1} failed")
            # Geometric bisection keeps relative accuracy when the root is
            # many orders of magnitude below the bracket top (p near 1).
            lo = np.copy(hi)
            pos = vals > 0.0
            for _ in range(1100):
                todo = pos & (self.b_prime(lo) >= vals) & (lo > 1e-320)
                if not np.any(todo):
                    break
                lo[todo] *= 0.5
            for _ in range(120):
                mid = np.sqrt(lo * hi)
                small = self.b_prime(mid) < vals
                lo = np.where(small, mid, lo)
                hi = np.where(small, hi, mid)
            out = np.where(pos, np.sqrt(lo * hi), 0.0)
        return float(out[0]) if single else out


def b_eval(material, t):
    """(B(t), B'(t), B''(t)) for t >= 0.

    Raises for B'' at t = 0 in the singular corner p < 2, k = 0.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("profiles are defined for t >= 0")
    return material.b(t), material.b_prime(t), material.b_second(t)


@dataclasses.dataclass
class SourceTerm:
    """Right-hand side f and optional absorption g for barriers.

    ``admissibility`` records the outcome of check_osserman for g:
    g_zero_near_0, osserman_checked, or unchecked.
    """

    f: Callable
    g: Callable = staticmethod(lambda s: np.zeros_like(np.asarray(s, dtype=float)))
    admissibility: str = UNCHECKED

    def f_vals(self, s):
        return np.asarray(self.f(np.asarray(s, dtype=float)), dtype=float)

    def g_vals(self, s):
        return np.asarray(self.g(np.asarray(s, dtype=float)), dtype=float)


def sample_vectors(dim, count, seed, r_range=_RADIUS_RANGE):
    """Seeded nonzero sample vectors: log-uniform radius, uniform direction."""
    rng = np.random.default_rng(seed)
    radii = np.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1]), count))
    dirs = rng.standard_normal((count, dim))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return radii[:, None] * dirs


def linearized_tensor(material, h, xi):
    """M(xi) = B''(H) gradH (x) gradH + B'(H) D2H, batched over rows of xi."""
    pts, single = (xi[None, :], True) if np.asarray(xi).ndim == 1 else (np.asarray(xi, float), False)
    hv = h.eval(pts)
    g = h.grad(pts)
    d2 = h.hess(pts)
    b2 = np.atleast_1d(material.b_second(hv))
    b1 = np.atleast_1d(material.b_prime(hv))
    mats = b2[:, None, None] * (g[:, :, None] * g[:, None, :]) + b1[:, None, None] * d2
    return mats[0] if single else mats


def check_structural_bounds(material, h, samples=None, n_samples=10000, seed=0):
    """Sampled ellipticity/boundedness constants of the linearized tensor.

    Returns (C1_est, C2_est) with

        C1_est = min <M(xi) v, v> / ((k + |xi|)^(p-2) |v|^2)
        C2_est = max |M(xi)|_F   /  (k + |xi|)^(p-2)

    over the given (xi, v) sample pairs.  A nonpositive C1_est is an
    admissibility failure and raises, naming the witnessing sample.
    """
    if samples is None:
        xi = sample_vectors(h.dim, n_samples, seed)
        v = sample_vectors(h.dim, n_samples, seed + 1, r_range=(1.0, 1.0))
    else:
        xi, v = (np.asarray(s, dtype=float) for s in samples)
    mats = linearized_tensor(material, h, xi)
    quad = np.einsum("ij,ijk,ik->i", v, mats, v)
    weight = (material.k + np.linalg.norm(xi, axis=-1)) ** (material.p - 2.0)
    ratios = quad / (weight * np.einsum("ij,ij->i", v, v))
    c1 = float(ratios.min())
    if c1 <= 0.0:
        bad = int(np.argmin(ratios))
        raise AdmissibilityError(violation(
            "vi", f"linearized tensor not positive along v = {v[bad]} at xi = {xi[bad]} "
                  f"(ratio {c1:.3e})"))
    frob = np.sqrt(np.einsum("ijk,ijk->i", mats, mats))
    c2 = float((frob / weight).max())
    return c1, c2


def check_flux_bound(material, h, samples=None, n_samples=10000, seed=0):
    """Sampled growth constant of the flux magnitude:

        C_flux = max B'(H(xi)) / (k + |xi|)^(p-1).
    """
    if samples is None:
        xi = sample_vectors(h.dim, n_samples, seed)
    else:
        xi = np.asarray(samples, dtype=float)
    num = material.b_prime(h.eval(xi))
    den = (material.k + np.linalg.norm(xi, axis=-1)) ** (material.p - 1.0)
    return float((num / den).max())


def flux(material, h, xi):
    """a(xi) = B'(H(xi)) grad H(xi), extended by 0 at xi = 0."""
    pts, single = (xi[None, :], True) if np.asarray(xi).ndim == 1 else (np.asarray(xi, float), False)
    out = np.zeros_like(pts)
    nz = np.linalg.norm(pts, axis=-1) > 0.0
    if np.any(nz):
        sub = pts[nz]
        out[nz] = np.atleast_1d(material.b_prime(h.eval(sub)))[:, None] * h.grad(sub)
    return out[0] if single else out


def check_flux_monotonicity(material, h, pairs=None, n_pairs=10000, seed=0):
    """Sampled monotonicity constant of the flux:

        C_monotone = min <a(x) - a(y), x - y> / ((|x| + |y|)^(p-2) |x - y|^2)

    over distinct sample pairs.  Nonpositive values raise, naming the pair.
    """
    if pairs is None:
        x = sample_vectors(h.dim, n_pairs, seed)
        y = sample_vectors(h.dim, n_pairs, seed + 1)
    else:
        x, y = (np.asarray(s, dtype=float) for s in pairs)
    keep = np.linalg.norm(x - y, axis=-1) > 0.0
    x, y = x[keep], y[keep]
    diff = flux(material, h, x) - flux(material, h, y)
    num = np.einsum("ij,ij->i", diff, x - y)
    den = (np.linalg.norm(x, axis=-1) + np.linalg.norm(y, axis=-1)) ** (material.p - 2.0)
    den = den * np.einsum("ij,ij->i", x - y, x - y)
    ratios = num / den
    cmin = float(ratios.min())
    if cmin <= 0.0:
        bad = int(np.argmin(ratios))
        raise AdmissibilityError(violation(
            "ii", f"flux not monotone between x = {x[bad]} and y = {y[bad]} "
                  f"(ratio {cmin:.3e})"))
    return cmin


def check_source_signs(source, s_hi=10.0, n_probe=257):
    """Reject sources with f <= 0 somewhere (hypothesis (vii)) or
    f + g < 0 somewhere (hypothesis (viii)), probing [0, s_hi]."""
    probe = np.linspace(0.0, s_hi, n_probe)
    fv = source.f_vals(probe)
    if np.any(fv <= 0.0):
        s_bad = probe[np.argmin(fv)]
        raise AdmissibilityError(
            violation("vii", f"f({s_bad:.4g}) = {fv.min():.4g} <= 0"))
    if np.any(fv + source.g_vals(probe) < 0.0):
        raise AdmissibilityError(violation("viii", "f + g takes negative values"))


def check_osserman(source, material, delta=1.0):
    """Barrier admissibility of g on [0, delta] (hypothesis (viii)).

    Returns ``g_zero_near_0`` when g vanishes on a positive interval at 0,
    ``osserman_checked`` when the probe integral

        I(eps) = int_eps^delta ds / L^{-1}(G(s)),   G(s) = int_0^s g,

    keeps growing under dyadic shrinking of eps (increments over 20
    halvings stay comparable to the first), and ``unchecked`` otherwise.
    The dyadic doubling test is a heuristic divergence probe, not a proof.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    grid = np.linspace(0.0, delta, 1025)
    gvals = source.g_vals(grid)
    scale = np.abs(gvals).max()
    tiny = 1e-14 * max(1.0, scale)
    nonzero = np.nonzero(np.abs(gvals) > tiny)[0]
    if nonzero.size == 0 or nonzero[0] >= 2:
        # g == 0 identically, or on the positive prefix [0, grid[idx-1]]
        return G_ZERO_NEAR_0

    nodes, weights = np.polynomial.legendre.leggauss(32)
    big_nodes, big_weights = np.polynomial.legendre.leggauss(64)

    def primitive(points):
        # G(s) = int_0^s g via 64-point Gauss-Legendre on [0, s] per point
        half = 0.5 * points
        sq = half[:, None] * (big_nodes[None, :] + 1.0)
        gv = source.g_vals(sq.ravel()).reshape(sq.shape)
        return half * (gv @ big_weights)

    increments = []
    for level in range(_OSSERMAN_LEVELS):
        a = delta / 2.0 ** (level + 1)
        b = delta / 2.0 ** level
        pts = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        gprim = primitive(pts)
        linv = material.ell_inverse(gprim)
        with np.errstate(divide="ignore"):
            integrand = 1.0 / linv
        increments.append(0.5 * (b - a) * float(integrand @ weights))
    increments = np.asarray(increments)
    if not np.all(np.isfinite(increments)):
        return OSSERMAN_CHECKED
    if increments[-1] >= 0.25 * increments[0]:
        return OSSERMAN_CHECKED
    return UNCHECKED


def admissibility_report(material, h, source, n_samples=10000, seed=0, delta=1.0):
    """Dict with the sampled constants and the Osserman verdict.

    This is the payload the CLI writes as admissibility.json.
    """
    c1, c2 = check_structural_bounds(material, h, n_samples=n_samples, seed=seed)
    c_flux = check_flux_bound(material, h, n_samples=n_samples, seed=seed)
    c_mono = check_flux_monotonicity(material, h, n_pairs=n_samples, seed=seed)
    verdict = check_osserman(source, material, delta=delta)
    return {
        "profile": {"kind": material.kind, "p": material.p, "k": material.k},
        "norm": h.kind,
        "C1_est": c1,
        "C2_est": c2,
        "C_flux": c_flux,
        "C_monotone": c_mono,
        "osserman_verdict": verdict,
    }
