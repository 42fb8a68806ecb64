"""
Auxiliary wave functions and the identity registry.

The table materializes chi_{n,a} = R^n (I-K)^{-1} psi^{(a)} on the
quadrature nodes (R = (I-K)^{-1} K the resolvent operator), the moment
scalars mu_{n,a} = <psi, Pi_I R^n rho psi^{(a)}>, the n-th order
resolvent kernels, and the derivative identities that tie them all
together.  identity_residual() turns each relation into a signed
numerical residual; derivatives in tau are centered differences over
re-built tables except where an identity itself supplies the derivative.
"""

import math
from dataclasses import replace

import numpy as np

from .errors import PsiTooSmall
from .fredholm import GridConfig, build_grid, discretize, half_line, resolve
from .kernel import kernel_row
from .wavefun import psi_second

FD_STEP = 1e-4
PSI_FLOOR_FRAC = 1e-6


def _psi_samples(model, x, a):
    if a == 0:
        return np.asarray(model.psi(x), dtype=float)
    if a == 1:
        return np.asarray(model.psi_prime(x), dtype=float)
    return np.asarray(psi_second(model, x), dtype=float)


class AwfTable:
    """chi[n][a] node values for n in 0..N, a in {0,1,2}, plus mu[n][a]
    for a in {0,1} and the resolved intermediates needed for off-node
    Nystrom evaluation.  Immutable after construction."""

    def __init__(self, model, disc, N):
        if N > 8:
            raise ValueError("N is capped at 8")
        self.model = model
        self.disc = disc
        self.grid = disc.grid
        self.N = N
        m = self.grid.nodes.size

        self.chi = np.empty((N + 1, 3, m))
        self.rho_chi = np.empty((N + 1, 3, m))
        for a in range(3):
            f = _psi_samples(model, self.grid.nodes, a)
            self.chi[0, a] = resolve(disc, f)
            self.rho_chi[0, a] = self.chi[0, a]  # rho psi = chi_0 already
        # chi_{n+1,a} = R chi_{n,a} = K_w rho chi_{n,a}
        for n in range(N):
            for a in range(3):
                rc = resolve(disc, self.chi[n, a])
                self.rho_chi[n, a] = rc
                self.chi[n + 1, a] = disc.apply_Kw(rc)
        for a in range(3):
            self.rho_chi[N, a] = resolve(disc, self.chi[N, a])

        psi_nodes = _psi_samples(model, self.grid.nodes, 0)
        w = self.grid.weights
        self.mu = np.array([[float(np.dot(w, psi_nodes * self.chi[n, a]))
                             for a in range(2)] for n in range(N + 1)])
        self.psi_floor = PSI_FLOOR_FRAC * float(np.max(np.abs(psi_nodes)))
        self._rows = {}

    # -- evaluation ----------------------------------------------------

    def _krow(self, xi):
        xi = float(xi)
        if xi not in self._rows:
            self._rows[xi] = kernel_row(self.model, xi, self.grid.nodes)
        return self._rows[xi]

    def eval_chi(self, n, a, xi):
        """chi_{n,a}(xi) off the nodes, by the Nystrom extension."""
        row = self._krow(xi) * self.grid.weights
        if n == 0:
            return float(_psi_samples(self.model, np.float64(xi), a)) \
                + float(np.dot(row, self.chi[0, a]))
        return float(np.dot(row, self.rho_chi[n - 1, a]))

    def nu(self, n, a):
        """nu_{n,a} = mu_{n,a} + mu_{n-1,a}, with mu_{-1,a} = 0."""
        v = self.mu[n, a]
        if n >= 1:
            v = v + self.mu[n - 1, a]
        return float(v)

    def eta(self, n, tau):
        """eta_n(tau) = (q(tau)/psi(tau) - 1)^n, guarded by psi_floor."""
        p = float(self.model.psi(tau))
        if abs(p) < self.psi_floor:
            raise PsiTooSmall("psi(%g) = %.3e below floor" % (tau, p))
        return (self.eval_chi(0, 0, tau) / p - 1.0) ** n

    # -- resolvent kernels --------------------------------------------

    def resolvent_xy(self, n, xi, zeta, ordering="standard"):
        """R_n(xi, zeta) for xi != zeta via the Christoffel-Darboux sum
        over chi products; zeta is assumed inside I."""
        g, ud = self.model.gamma, self.model.u0_dot
        s = 0.0
        for k in range(1, n + 1):
            if ordering == "standard":
                s += self.eval_chi(n - k, 0, xi) * self.eval_chi(k - 1, 1, zeta) \
                    - self.eval_chi(n - k, 1, xi) * self.eval_chi(k - 1, 0, zeta)
            else:
                s += self.eval_chi(n - k, 0, xi) * self.eval_chi(k - 1, 1, zeta) \
                    - self.eval_chi(k - 1, 1, xi) * self.eval_chi(n - k, 0, zeta)
        return (ud / g) * s / (xi - zeta)

    def resolvent_diag(self, n, xi):
        """R_n(xi, xi) at an interior point, with the xi-derivatives of
        chi taken from the derivative identity (never FD)."""
        g, ud = self.model.gamma, self.model.u0_dot
        s = 0.0
        for k in range(1, n + 1):
            s += self.dchi_dxi(n - k, 0, xi) * self.eval_chi(k - 1, 1, xi) \
                - self.dchi_dxi(k - 1, 1, xi) * self.eval_chi(n - k, 0, xi)
        return (ud / g) * s

    # -- derivative identities ----------------------------------------

    def dchi_dj(self, n, alpha, xi, j):
        """Parameter derivative d(chi_{n,alpha}(xi))/d(tau_j) from the
        resolvent-kernel representation; j is a 0-based index into the
        finite endpoints."""
        tj = self.grid.iu.finite_endpoints[j]
        sign = -1.0 if (j + 1) % 2 else 1.0
        out = self.resolvent_xy(1, xi, tj) * self.eval_chi(n, alpha, tj)
        for k in range(n):
            out += (self.resolvent_xy(n - k + 1, xi, tj)
                    + self.resolvent_xy(n - k, xi, tj)) \
                * self.eval_chi(k, alpha, tj)
        return sign * out

    def dchi_dxi(self, n, alpha, xi, include_dj=True):
        """d(chi_{n,alpha})/dxi at fixed interval, from the derivative
        identity.  Requires n + 1 <= N and alpha <= 1."""
        g, ud, udd = self.model.gamma, self.model.u0_dot, self.model.u0_ddot
        out = self.eval_chi(n, alpha + 1, xi)
        out -= (g / ud ** 2) * (ud * self.mu[0, alpha] * self.eval_chi(n, 0, xi)
                                + udd * n * self.eval_chi(n, alpha, xi)
                                + udd * (n + 1) * self.eval_chi(n + 1, alpha, xi))
        for k in range(n):
            out -= (g / ud) * self.nu(n - k, alpha) * self.eval_chi(k, 0, xi)
        if include_dj:
            for j in range(len(self.grid.iu.finite_endpoints)):
                out -= self.dchi_dj(n, alpha, xi, j)
        return out

    def chi_total_deriv(self, n, alpha, j=0):
        """Total derivative d/dtau_j of chi_{n,alpha}(tau_j): the xi and
        tau_j partials combine so that the singular self-term cancels,
        leaving the algebraic part minus the i != j cross terms."""
        tj = self.grid.iu.finite_endpoints[j]
        g, ud, udd = self.model.gamma, self.model.u0_dot, self.model.u0_ddot
        out = self.eval_chi(n, alpha + 1, tj)
        out -= (g / ud ** 2) * (ud * self.mu[0, alpha] * self.eval_chi(n, 0, tj)
                                + udd * n * self.eval_chi(n, alpha, tj)
                                + udd * (n + 1) * self.eval_chi(n + 1, alpha, tj))
        for k in range(n):
            out -= (g / ud) * self.nu(n - k, alpha) * self.eval_chi(k, 0, tj)
        for i in range(len(self.grid.iu.finite_endpoints)):
            if i != j:
                out -= self.dchi_dj(n, alpha, tj, i)
        return out


def build_awf(model, disc, N):
    """Construct the AWF table of order N over a discretized kernel."""
    return AwfTable(model, disc, N)


def resolvent_kernel(table, n, i, j):
    """R_n at node pair (i, j); diagonal via the derivative identity."""
    if not 1 <= n <= table.N:
        raise ValueError("need 1 <= n <= table.N")
    x = table.grid.nodes
    if i == j:
        return table.resolvent_diag(n, float(x[i]))
    return table.resolvent_xy(n, float(x[i]), float(x[j]))


# ----------------------------------------------------------------------
# independent matrix-resolvent oracle (no chi machinery)

def resolvent_matrix(disc, n):
    """Node matrix r_n[i,j] with R^n f(x_i) = sum_j w_j r_n[i,j] f(x_j),
    computed from powers of K_w(I - K_w)^{-1}."""
    w = disc.grid.weights
    KW = disc.K * w[None, :]
    R = np.linalg.solve(np.eye(KW.shape[0]) - KW, KW)
    P = np.linalg.matrix_power(R, n)
    return P / w[None, :]


def resolvent_endpoint(disc, model, tau, n_max):
    """R_n(tau, tau) for n = 1..n_max with tau off the grid (endpoint),
    via Nystrom extension rows of the matrix resolvent."""
    from .kernel import kernel_diag
    x, w = disc.grid.nodes, disc.grid.weights
    c = kernel_row(model, tau, x)
    r1m = resolvent_matrix(disc, 1)
    # r_1(tau, x_j) = K(tau,x_j) + sum_l w_l K(tau,x_l) r_1(x_l,x_j)
    row = c + (c * w) @ r1m
    # r_1(tau,tau) = K(tau,tau) + sum_l w_l K(tau,x_l) r_1(x_l,tau)
    diag = [kernel_diag(model, tau) + float(np.dot(c * w, row))]
    prev = row
    for n in range(2, n_max + 1):
        diag.append(float(np.dot(prev * w, row)))
        prev = (prev * w) @ r1m
    return np.array(diag)


# ----------------------------------------------------------------------
# identity registry

IDENTITIES = ("CLOSURE", "ORDER", "AWF-DERIV", "AWF-PARAM", "MU01",
              "MU00-DOT", "MUN0-DOT", "MU-SHIFT", "MU-IPRO", "QN-ODE")


def _rebuild(model, tau, ref_table, cfg=None):
    """Private table at a shifted endpoint, matching the reference
    table's truncation length so FD differences see no tail noise."""
    cfg = cfg or GridConfig()
    L = ref_table.grid.truncation
    if L is not None:
        cfg = replace(cfg, L_start=L)
    grid = build_grid(half_line(tau), cfg)
    return build_awf(model, discretize(model, grid), ref_table.N)


def closure_residual(table, n, xi):
    """chi_{n,2} minus its closure expansion, at a point xi."""
    m = table.model
    g, ud, udd = m.gamma, m.u0_dot, m.u0_ddot
    rhs = (g * g / ud ** 2) * (m.v0 + xi) * table.eval_chi(n, 0, xi) \
        - (g * udd / ud ** 2) * table.eval_chi(n, 1, xi)
    for k in range(n + 1):
        rhs += (g / ud) * (table.nu(n - k, 0) * table.eval_chi(k, 1, xi)
                           - table.nu(n - k, 1) * table.eval_chi(k, 0, xi))
    return table.eval_chi(n, 2, xi) - rhs


def qn_ode_residual(model, table, tau, n=1, h=FD_STEP, cfg=None):
    """Residual of the second-order tau-ODE for chi_{n,0}(tau): the
    second derivative is an independent centered difference over rebuilt
    tables; every first derivative on the right-hand side comes from the
    identities themselves."""
    if n + 2 > table.N:
        raise ValueError("need table.N >= n + 2")
    g, ud, udd = model.gamma, model.u0_dot, model.u0_ddot
    tp = _rebuild(model, tau + h, table, cfg)
    tm = _rebuild(model, tau - h, table, cfg)
    chi_pp = (tp.eval_chi(n, 0, tau + h) - 2.0 * table.eval_chi(n, 0, tau)
              + tm.eval_chi(n, 0, tau - h)) / h ** 2

    c = lambda k: table.eval_chi(k, 0, tau)
    cp = lambda k: table.chi_total_deriv(k, 0)
    q = c(0)
    # d(mu_{k,0})/dtau = -(k+1) eta_k q^2
    mup = lambda k: 0.0 if k < 0 else -(k + 1) * table.eta(k, tau) * q * q
    nu_ = lambda k, a: 0.0 if k < 0 else table.nu(k, a)

    rhs = (g * g / ud ** 2) * (model.v0 + tau) * c(n)
    rhs -= (g * udd / ud ** 2) * ((2 * n + 1) * cp(n) + 2 * (n + 1) * cp(n + 1))
    rhs -= (g * g * udd ** 2 / ud ** 4) * ((n * n + n) * c(n)
                                           + 2 * (n + 1) ** 2 * c(n + 1)
                                           + (n + 1) * (n + 2) * c(n + 2))
    rhs -= (g * g * udd / ud ** 3) * (n + 1) * table.mu[0, 0] * c(n + 1)
    for k in range(n + 1):
        rhs -= (g / ud) * ((mup(n - k) + mup(n - k - 1))
                           + 2.0 * nu_(n - k, 1)) * c(k)
        for l in range(k + 1):
            rhs += (g * g / ud ** 2) * nu_(n - k, 0) * nu_(k - l, 0) * c(l)
        rhs -= (g * g * udd / ud ** 3) * (
            nu_(n - k, 0) * ((n - k + 1) * c(k) - (k + 1) * c(k + 1))
            + (n + 1) * nu_(n - k + 1, 0) * c(k))
    return chi_pp - rhs


def identity_residual(name, model, table, tau, n=None, p=None,
                      h=FD_STEP, cfg=None):
    """Signed residual of a named identity at endpoint tau.

    The table must be built on [tau, inf).  FD-based identities rebuild
    private tables at tau +- h.
    """
    if name not in IDENTITIES:
        raise ValueError("unknown identity %r" % name)
    m = model
    g, ud, udd = m.gamma, m.u0_dot, m.u0_ddot

    if name == "CLOSURE":
        nn = table.N - 1 if n is None else n
        return closure_residual(table, nn, tau)

    if name == "ORDER":
        nn = table.N if n is None else n
        pp = 0 if p is None else p
        r = 0.0
        for a in range(2):
            lhs = table.eval_chi(nn, a, tau)
            rhs = table.eta(nn - pp, tau) * table.eval_chi(pp, a, tau)
            if abs(lhs - rhs) > abs(r):
                r = lhs - rhs
        return r

    if name == "AWF-DERIV":
        # xi-derivative identity vs centered FD of the Nystrom extension
        nn = (table.N - 1) if n is None else n
        xi = tau + 1.0
        fd = (table.eval_chi(nn, 0, xi + h)
              - table.eval_chi(nn, 0, xi - h)) / (2.0 * h)
        return fd - table.dchi_dxi(nn, 0, xi)

    if name == "AWF-PARAM":
        nn = (table.N - 1) if n is None else n
        xi = tau + 1.0
        tp = _rebuild(m, tau + h, table, cfg)
        tm = _rebuild(m, tau - h, table, cfg)
        fd = (tp.eval_chi(nn, 0, xi) - tm.eval_chi(nn, 0, xi)) / (2.0 * h)
        return fd - table.dchi_dj(nn, 0, xi, 0)

    if name == "MU01":
        q = table.eval_chi(0, 0, tau)
        rhs = 0.5 * ((g / ud) * (table.mu[0, 0] ** 2
                                 + (udd / ud) * table.mu[1, 0]) - q * q)
        return table.mu[0, 1] - rhs

    if name == "MU00-DOT":
        tp = _rebuild(m, tau + h, table, cfg)
        tm = _rebuild(m, tau - h, table, cfg)
        fd = (tp.mu[0, 0] - tm.mu[0, 0]) / (2.0 * h)
        return fd + table.eval_chi(0, 0, tau) ** 2

    if name == "MUN0-DOT":
        nn = (table.N - 1) if n is None else n
        tp = _rebuild(m, tau + h, table, cfg)
        tm = _rebuild(m, tau - h, table, cfg)
        fd = (tp.mu[nn, 0] - tm.mu[nn, 0]) / (2.0 * h)
        q = table.eval_chi(0, 0, tau)
        return fd + (nn + 1) * table.eta(nn, tau) * q * q

    if name == "MU-SHIFT":
        nn = table.N if n is None else n
        w = table.grid.weights
        q = table.chi[0, 0]
        r = 0.0
        for a in range(2):
            lhs = table.mu[nn, a] + table.mu[nn - 1, a]
            rhs = float(np.dot(w, table.chi[nn - 1, a] * q))
            r = lhs - rhs if abs(lhs - rhs) > abs(r) else r
        return r

    if name == "MU-IPRO":
        nn = table.N if n is None else n
        w = table.grid.weights
        psi = _psi_samples(m, table.grid.nodes, 0)
        q = table.chi[0, 0]
        r = 0.0
        for a in range(2):
            acc = ((-1.0) ** nn) * psi * table.chi[0, a]
            for k in range(nn):
                acc -= ((-1.0) ** (nn - k)) * table.chi[k, a] * q
            rhs = float(np.dot(w, acc))
            lhs = table.mu[nn, a]
            r = lhs - rhs if abs(lhs - rhs) > abs(r) else r
        return r

    # QN-ODE
    return qn_ode_residual(model, table, tau, n=1 if n is None else n,
                           h=h, cfg=cfg)
