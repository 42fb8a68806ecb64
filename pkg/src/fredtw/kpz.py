"""
Finite-temperature (Fermi-weighted) Airy kernels and their gap
probabilities:

    K(xi, zeta) = int_R  phi(lam + g xi) phi(lam + g zeta)
                         / (c1 exp(-c2 lam) + 1)  dlam,

the generic weighted form int phi phi / f(lam) dlam on a finite window,
and the closed-form reparametrization u(x) solving
u' = -c1 exp(-c2 u) - 1 that identifies the weighted kernel with a
profile-type one at finite reference point.

The kernel is evaluated by direct lambda-integration on a two-sided
truncated grid: the Fermi factor kills the left tail (it decays like
exp(c2 lam)/c1), the phi decay kills the right one.  Gap probabilities
reuse the Nystrom determinant machinery through an externally built
kernel matrix with a lambda-grid shared across all node pairs.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .airy import airy_ai
from .errors import NonConvergent, WeightVanishes
from .fredholm import (GridConfig, build_grid, discretize_matrix,
                       fredholm_det, half_line)

WEIGHT_FLOOR = 1e-14


@dataclass(frozen=True)
class FiniteTempSpec:
    c1: float
    c2: float
    phi: object = field(default=None)
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.c1 > 0.0 and self.c2 > 0.0):
            raise ValueError("c1 and c2 must be strictly positive")
        if self.phi is None:
            object.__setattr__(self, "phi", airy_ai)

    def fermi(self, lam):
        """The weight 1/(c1 e^{-c2 lam} + 1), evaluated stably."""
        lam = np.asarray(lam, dtype=float)
        # e^{-c2 lam} overflows for lam << 0; switch branches there
        out = np.empty_like(lam)
        neg = self.c2 * lam < -30.0
        out[neg] = np.exp(self.c2 * lam[neg]) / (
            self.c1 + np.exp(self.c2 * lam[neg]))
        out[~neg] = 1.0 / (self.c1 * np.exp(-self.c2 * lam[~neg]) + 1.0)
        return out


def _gl_grid(lo, hi, panel_len=1.0, n=32):
    t, w = np.polynomial.legendre.leggauss(n)
    n_panels = max(1, int(math.ceil((hi - lo) / panel_len)))
    edges = np.linspace(lo, hi, n_panels + 1)
    h = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + h[:, None] * t[None, :]).ravel(), \
        (h[:, None] * w[None, :]).ravel()


def _lambda_cuts(spec, x_min, tol):
    """Two-sided truncation of the lambda axis: left where the Fermi
    factor drops below tol/100, right where the phi^2 envelope does
    (Airy decay gauged at the smallest kernel argument)."""
    lo = min(math.log(0.01 * tol * spec.c1) / spec.c2 - 1.0, -2.0)
    a = 10.0
    while airy_ai(np.array([a]))[0] ** 2 > 0.01 * tol and a < 60.0:
        a += 5.0
    hi = max(a - spec.gamma * x_min, lo + 4.0)
    return lo, hi


def _panel_len(spec):
    # the Fermi transition layer has width 1/c2; resolve it
    return min(1.0, 4.0 / spec.c2)


def kpz_kernel(spec, xi, zeta, tol=1e-10):
    """Fermi-weighted kernel value at a single pair, with the quadrature
    error estimated by panel halving."""
    if tol < 1e-12:
        raise ValueError("tol must be >= 1e-12")
    lo, hi = _lambda_cuts(spec, min(xi, zeta), tol)
    base = _panel_len(spec)
    vals = []
    for plen in (base, 0.5 * base):
        lam, w = _gl_grid(lo, hi, panel_len=plen)
        f = np.asarray(spec.phi(lam + spec.gamma * xi), dtype=float) \
            * np.asarray(spec.phi(lam + spec.gamma * zeta), dtype=float)
        vals.append(float(np.dot(w * spec.fermi(lam), f)))
    if abs(vals[1] - vals[0]) > tol:
        raise NonConvergent("lambda-quadrature halving estimate %.3e "
                            "exceeds tol" % abs(vals[1] - vals[0]))
    return vals[1]


def generic_ft_kernel(phi, f_weight, gamma, lambda_lo, lambda_hi,
                      xi, zeta, tol=1e-10):
    """int_{lambda_lo}^{lambda_hi} phi(lam+g xi) phi(lam+g zeta) / f(lam)
    dlam on an explicit finite window; reversed limits flip the sign."""
    sign = 1.0
    if lambda_lo > lambda_hi:
        lambda_lo, lambda_hi, sign = lambda_hi, lambda_lo, -1.0
    vals = []
    for plen in (1.0, 0.5):
        lam, w = _gl_grid(lambda_lo, lambda_hi, panel_len=plen)
        f = np.asarray(f_weight(lam), dtype=float)
        if np.min(np.abs(f)) < WEIGHT_FLOOR:
            raise WeightVanishes("|f| < %g at a quadrature node"
                                 % WEIGHT_FLOOR)
        num = np.asarray(phi(lam + gamma * xi), dtype=float) \
            * np.asarray(phi(lam + gamma * zeta), dtype=float)
        vals.append(float(np.dot(w, num / f)))
    if abs(vals[1] - vals[0]) > tol:
        raise NonConvergent("quadrature halving estimate %.3e exceeds tol"
                            % abs(vals[1] - vals[0]))
    return sign * vals[1]


def kpz_matrix(spec, nodes, tol=1e-10):
    """The kernel matrix on a set of nodes, all pairs at once: with
    Phi[i,l] = phi(lam_l + g x_i) the matrix is Phi W Phi^T for the
    Fermi-weighted lambda quadrature W, hence symmetric positive
    semi-definite by construction."""
    x = np.asarray(nodes, dtype=float)
    lo, hi = _lambda_cuts(spec, float(np.min(x)), tol)
    base = _panel_len(spec)
    mats = []
    for plen in (base, 0.5 * base):
        lam, w = _gl_grid(lo, hi, panel_len=plen)
        Phi = np.asarray(spec.phi(lam[None, :] + spec.gamma * x[:, None]),
                         dtype=float)
        mats.append((Phi * (w * spec.fermi(lam))[None, :]) @ Phi.T)
    if float(np.max(np.abs(mats[1] - mats[0]))) > tol:
        raise NonConvergent("kernel-matrix halving estimate exceeds tol")
    return mats[1]


def kpz_gap(spec, tau, cfg=None, tol=1e-10):
    """F([tau, inf)) = det(I - K) for the Fermi-weighted kernel.

    The half-line grid cannot use the model-driven tail rule (there is
    no WaveModel), so the truncation is chosen by doubling L until the
    determinant stabilizes below cfg.det_stab_tol.
    """
    cfg = cfg or GridConfig()
    from dataclasses import replace
    L, F_prev = cfg.L_start, None
    while L <= cfg.L_max:
        grid = build_grid(half_line(tau), replace(cfg, L_start=L))
        disc = discretize_matrix(kpz_matrix(spec, grid.nodes, tol), grid)
        F = fredholm_det(disc).value
        if F_prev is not None and abs(F - F_prev) < cfg.det_stab_tol:
            return F_prev
        F_prev = F
        L *= 2.0
    raise NonConvergent("determinant not stabilized up to L_max=%g"
                        % cfg.L_max)


def u_reparam_check(spec, u_ref, n_points=50):
    """Max deviation between the numerically integrated solution of
    u' = -c1 e^{-c2 u} - 1, u(0) = u_ref, and the closed-form inverse
    x(u) = (1/c2)[ln(e^{c2 u_ref} + c1) - ln(e^{c2 u} + c1)], sampled at
    n_points points across a drop of 5 in u."""
    c1, c2 = spec.c1, spec.c2
    if not math.isfinite(u_ref):
        raise ValueError("u_ref must be finite")
    A = math.exp(c2 * u_ref) + c1
    x_span = (math.log(A) - math.log(math.exp(c2 * (u_ref - 5.0)) + c1)) / c2

    def rhs(x, u):
        return [-c1 * math.exp(-c2 * u[0]) - 1.0]

    xs = np.linspace(0.0, x_span, n_points)
    sol = solve_ivp(rhs, (0.0, x_span), [u_ref], t_eval=xs,
                    method="DOP853", rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise NonConvergent(sol.message)
    u_closed = np.log(A * np.exp(-c2 * xs) - c1) / c2
    return float(np.max(np.abs(sol.y[0] - u_closed)))
