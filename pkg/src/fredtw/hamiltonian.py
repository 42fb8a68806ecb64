"""
Hamiltonians H_n at the interval endpoint: three computation routes,
the order-scaling identity, and the link between H_1 and the
log-derivative of the Fredholm determinant.

Routes:
  DIAGONAL    (gamma/u0_dot) R_n(tau, tau) via the matrix-resolvent
              Nystrom extension -- fully independent of the chi
              derivative identities, so it can serve as oracle.
  CANONICAL   the Wronskian-type sum over chi pairs with total
              tau-derivatives taken from the derivative identities.
  CLOSED_FORM n = 1 only; H_1 expressed solely through q = chi_{0,0}
              and its first two tau-derivatives.
"""

import math
from dataclasses import dataclass

import numpy as np

from .awf import FD_STEP, _rebuild, resolvent_endpoint
from .errors import PsiTooSmall
from .fredholm import GridConfig, gap_probability, half_line

ROUTES = ("DIAGONAL", "CANONICAL", "CLOSED_FORM")


@dataclass(frozen=True)
class HamiltonianEval:
    n: int
    tau: float
    value: float
    route: str


def _q_derivs(model, table, tau, h=FD_STEP, cfg=None):
    """(q, q', q'') at the endpoint: q' is the total derivative from the
    identity machinery, q'' a centered difference of q over rebuilt
    tables (independent of the identity under test)."""
    q = table.eval_chi(0, 0, tau)
    qp = table.chi_total_deriv(0, 0)
    tp = _rebuild(model, tau + h, table, cfg)
    tm = _rebuild(model, tau - h, table, cfg)
    qpp = (tp.eval_chi(0, 0, tau + h) - 2.0 * q
           + tm.eval_chi(0, 0, tau - h)) / h ** 2
    return q, qp, qpp


def hamiltonian(table, n, tau, route="DIAGONAL"):
    """H_n at the finite endpoint tau by the selected route."""
    if route not in ROUTES:
        raise ValueError("unknown route %r" % route)
    if not 1 <= n <= table.N:
        raise ValueError("need 1 <= n <= table.N")
    m = table.model
    g, ud, udd = m.gamma, m.u0_dot, m.u0_ddot

    if route == "DIAGONAL":
        diag = resolvent_endpoint(table.disc, m, tau, n)
        return (g / ud) * float(diag[n - 1])

    if route == "CANONICAL":
        s = 0.0
        for k in range(1, n + 1):
            s += table.chi_total_deriv(n - k, 0) * table.eval_chi(k - 1, 1, tau) \
                - table.chi_total_deriv(k - 1, 1) * table.eval_chi(n - k, 0, tau)
        return s

    # CLOSED_FORM, n = 1 only
    if n != 1:
        raise ValueError("CLOSED_FORM is available only at n = 1")
    p = float(m.psi(tau))
    if abs(p) < table.psi_floor:
        raise PsiTooSmall("psi(%g) = %.3e below floor" % (tau, p))
    pp = float(m.psi_prime(tau))
    q, qp, qpp = _q_derivs(m, table, tau)
    corr = (g * udd / ud ** 2) * q * (qp / p - pp * q / (p * p))
    return qp * qp - q * (qpp - (g / ud) * q ** 3 + corr)


def hamiltonian_scaling_residual(table, n, tau):
    """H_n - n eta^{n-1} H_1, both Hamiltonians by the DIAGONAL route."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = table.model
    diag = resolvent_endpoint(table.disc, m, tau, n)
    h1 = (m.gamma / m.u0_dot) * float(diag[0])
    hn = (m.gamma / m.u0_dot) * float(diag[n - 1])
    if n == 1 or (h1 == 0.0 and hn == 0.0):
        return hn - n * h1 if n == 1 else 0.0
    return hn - n * table.eta(n - 1, tau) * h1


def logdet_link_residual(model, tau, h=1e-3, cfg=None, N=1):
    """Centered FD of log F([tau, inf)) minus (u0_dot/gamma) H_1(tau)."""
    if not 1e-5 <= h <= 1e-2:
        raise ValueError("h must lie in [1e-5, 1e-2]")
    from .awf import build_awf
    from .fredholm import build_grid, discretize
    cfg = cfg or GridConfig()
    grid = build_grid(half_line(tau), cfg, model=model)
    table = build_awf(model, discretize(model, grid), N)
    h1 = hamiltonian(table, 1, tau, route="DIAGONAL")

    from dataclasses import replace
    pinned = replace(cfg, L_start=grid.truncation, L_max=grid.truncation)
    Fp = gap_probability(model, half_line(tau + h), pinned)
    Fm = gap_probability(model, half_line(tau - h), pinned)
    fd = (math.log(Fp) - math.log(Fm)) / (2.0 * h)
    return fd - (model.u0_dot / model.gamma) * h1


def h1_derivative_residual(model, table, tau, h=FD_STEP, cfg=None):
    """FD of H_1 across rebuilt tables minus the closed-form derivative
    -(gamma^2/u0_dot^2)(q^2 + (u0_ddot/gamma)(2q/psi - 1) H_1)."""
    m = model
    g, ud, udd = m.gamma, m.u0_dot, m.u0_ddot
    p = float(m.psi(tau))
    if udd != 0.0 and abs(p) < table.psi_floor:
        raise PsiTooSmall("psi(%g) = %.3e below floor" % (tau, p))
    tp = _rebuild(m, tau + h, table, cfg)
    tm = _rebuild(m, tau - h, table, cfg)
    fd = (hamiltonian(tp, 1, tau + h, "DIAGONAL")
          - hamiltonian(tm, 1, tau - h, "DIAGONAL")) / (2.0 * h)
    q = table.eval_chi(0, 0, tau)
    h1 = hamiltonian(table, 1, tau, "DIAGONAL")
    rhs = -(g * g / ud ** 2) * (q * q)
    if udd != 0.0:
        rhs -= (g * g / ud ** 2) * (udd / g) * (2.0 * q / p - 1.0) * h1
    return fd - rhs
