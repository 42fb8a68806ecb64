"""
The integrable kernel K(xi, zeta) built from boundary data.

Primary route: the Christoffel-Darboux quotient
    K = (u0_dot/gamma) (psi(xi) psi'(zeta) - psi'(xi) psi(zeta)) / (xi - zeta)
with the exact removable-singularity value on the diagonal.  Oracle
route: direct x-integration of the defining integral
    K = int_0^inf phi(u(x) + gamma xi) phi(u(x) + gamma zeta) dx
for models that carry a profile.
"""

import numpy as np

from .errors import NonConvergent

DELTA_DIAG = 1e-6   # below this separation the CD quotient cancels badly
X_CAP = 200.0       # truncation cap for the direct-integral oracle


def kernel_diag(model, xi):
    """Exact diagonal value K(xi, xi)."""
    xi = np.asarray(xi, dtype=float)
    g, ud, udd = model.gamma, model.u0_dot, model.u0_ddot
    p = model.psi(xi)
    pp = model.psi_prime(xi)
    out = (ud / g) * pp * pp - (g / ud) * (model.v0 + xi) * p * p \
        + (udd / ud) * p * pp
    return float(out) if np.ndim(xi) == 0 else out


def cd_kernel(model, xi, zeta):
    """Kernel value via the Christoffel-Darboux formula.

    For |xi - zeta| <= DELTA_DIAG the quotient is replaced by the exact
    diagonal value at the midpoint; the first-order term of the CD
    expansion vanishes by symmetry there, so the seam is O(delta^2)
    continuous.
    """
    if abs(xi - zeta) <= DELTA_DIAG:
        return kernel_diag(model, 0.5 * (xi + zeta))
    num = float(model.psi(xi)) * float(model.psi_prime(zeta)) \
        - float(model.psi_prime(xi)) * float(model.psi(zeta))
    return (model.u0_dot / model.gamma) * num / (xi - zeta)


def kernel_matrix(model, nodes):
    """K(xi_i, xi_j) for all node pairs, vectorized.

    Bit-for-bit symmetric: every product is formed once per unordered
    pair up to an exact IEEE negation.
    """
    x = np.asarray(nodes, dtype=float)
    p = np.asarray(model.psi(x), dtype=float)
    pp = np.asarray(model.psi_prime(x), dtype=float)
    num = p[:, None] * pp[None, :] - pp[:, None] * p[None, :]
    den = x[:, None] - x[None, :]
    np.fill_diagonal(den, 1.0)
    K = (model.u0_dot / model.gamma) * num / den
    near = np.abs(den) <= DELTA_DIAG
    np.fill_diagonal(near, True)
    if np.any(near):
        ii, jj = np.nonzero(near)
        K[ii, jj] = kernel_diag(model, 0.5 * (x[ii] + x[jj]))
    return K


def kernel_row(model, xi, nodes):
    """K(xi, x_j) for a single off-grid xi against many nodes."""
    x = np.asarray(nodes, dtype=float)
    pxi = float(model.psi(xi))
    ppxi = float(model.psi_prime(xi))
    p = np.asarray(model.psi(x), dtype=float)
    pp = np.asarray(model.psi_prime(x), dtype=float)
    den = xi - x
    near = np.abs(den) <= DELTA_DIAG
    den[near] = 1.0
    row = (model.u0_dot / model.gamma) * (pxi * pp - ppxi * p) / den
    if np.any(near):
        row[near] = kernel_diag(model, 0.5 * (xi + x[near]))
    return row


def _gl_panels(a, b, panel_len, n_per_panel=32):
    t, w = np.polynomial.legendre.leggauss(n_per_panel)
    n_panels = max(1, int(np.ceil((b - a) / panel_len)))
    edges = np.linspace(a, b, n_panels + 1)
    h = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + h[:, None] * t[None, :]).ravel()
    wts = (h[:, None] * w[None, :]).ravel()
    return nodes, wts


def kernel_direct(model, xi, zeta, tol=1e-10):
    """Direct x-integration of the defining kernel integral.

    Requires model.profile.  Truncates at X where the integrand envelope
    falls below tol*1e-2, doubling X up to X_CAP; the quadrature error is
    estimated by panel halving.  Used only as an oracle for cd_kernel.
    """
    if model.profile is None:
        raise ValueError("kernel_direct needs a model with a profile")
    u, phi = model.profile
    g = model.gamma

    def integrand(x):
        ux = np.asarray(u(x), dtype=float)
        return np.asarray(phi(ux + g * xi), dtype=float) \
            * np.asarray(phi(ux + g * zeta), dtype=float)

    X = 8.0
    while X < X_CAP:
        if abs(integrand(np.array([X]))[0]) < tol * 1e-2:
            break
        X *= 2.0
    else:
        raise NonConvergent("integrand tail above tolerance at X cap")

    nodes, wts = _gl_panels(0.0, X, panel_len=2.0)
    coarse = float(np.dot(wts, integrand(nodes)))
    nodes, wts = _gl_panels(0.0, X, panel_len=1.0)
    fine = float(np.dot(wts, integrand(nodes)))
    if abs(fine - coarse) > tol:
        raise NonConvergent(
            "quadrature refinement estimate %.3e exceeds tol" % abs(fine - coarse))
    return fine


def kernel_derivative_residual(model, xi, zeta, h=1e-4):
    """Residual of the kernel derivative identity

        (d_xi + d_zeta) K + (gamma/u0_dot)(psi(xi)psi(zeta)
                                           + (u0_ddot/u0_dot) K) = 0

    with the diagonal-direction derivative taken by centered differences
    of cd_kernel; expected O(h^2).
    """
    dsum = (cd_kernel(model, xi + h, zeta + h)
            - cd_kernel(model, xi - h, zeta - h)) / (2.0 * h)
    g, ud, udd = model.gamma, model.u0_dot, model.u0_ddot
    return dsum + (g / ud) * (float(model.psi(xi)) * float(model.psi(zeta))
                              + (udd / ud) * cd_kernel(model, xi, zeta))
