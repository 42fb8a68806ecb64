import math
from dataclasses import replace

import numpy as np
import pytest

from fredtw.errors import PsiTooSmall
from fredtw.fredholm import gap_probability, half_line
from fredtw.twsolver import (SolverConfig, det_via_alternative,
                             det_via_functional, q_ode_residual, solve_q,
                             _ode_rhs)
from fredtw.wavefun import airy_model, damped_airy_model, zero_model

from conftest import endpoint_q

Q0_AIRY = 0.36706155154807796


def test_q0_matches_resolvent_oracle(airy_sol):
    assert airy_sol.interp(airy_sol.q, 0.0) == pytest.approx(
        Q0_AIRY, abs=1e-6)


def test_solution_metadata(airy_sol):
    assert airy_sol.match_T == 8.0
    assert airy_sol.iterations <= 30
    assert airy_sol.residual_norm < 1e-8


def test_hastings_mcleod_character(airy, airy_sol):
    for t in np.linspace(4.0, 8.0, 9):
        ratio = airy_sol.interp(airy_sol.q, t) / float(airy.psi(t))
        assert 1.0 - 1e-4 <= ratio <= 1.0 + 1e-4


def test_ode_residual_interior_nodes(airy, airy_sol):
    worst = 0.0
    for p, _ in airy_sol._slices():
        for t in p.nodes[1:-1]:
            worst = max(worst, abs(q_ode_residual(airy_sol, airy, float(t))))
    assert worst < 1e-8
    with pytest.raises(ValueError):
        q_ode_residual(airy_sol, airy, -1.234567)  # not a node


def test_perturbation_sensitivity(airy, airy_sol):
    bump = 1e-3 * np.exp(-((airy_sol.tau_grid - 1.0) / 0.5) ** 2)
    perturbed = replace(airy_sol, q=airy_sol.q + bump)
    interior = np.concatenate([p.nodes[1:-1] for p, _ in airy_sol._slices()])
    node = float(interior[np.argmin(np.abs(interior - 1.0))])
    assert abs(q_ode_residual(perturbed, airy, node)) >= 1e-4


def test_deep_tail_start(airy):
    sol = solve_q(airy, 6.0)
    dev = np.max(np.abs(sol.q - airy.psi(sol.tau_grid)))
    assert dev <= 1e-8


def test_zero_model_fixed_point():
    sol = solve_q(zero_model(), -1.0)
    assert sol.iterations == 1
    assert np.max(np.abs(sol.q)) == 0.0
    m = zero_model()
    assert det_via_functional(sol, m, 0.0) == 1.0
    assert det_via_alternative(sol, m, 0.0) == 1.0


def test_functional_routes_match_direct(airy, airy_sol):
    for tau in (-2.0, 0.0, 1.5):
        Fd = gap_probability(airy, half_line(tau))
        assert abs(det_via_functional(airy_sol, airy, tau) - Fd) < 1e-6
        assert abs(det_via_alternative(airy_sol, airy, tau) - Fd) < 1e-6
    with pytest.raises(ValueError):
        det_via_functional(airy_sol, airy, -3.0)


def test_tw_reduction_same_code_path(airy, airy_sol):
    """With u0_ddot = 0 the alternative representation must equal the
    classical exp(-int (sigma - tau) q^2) through the very same
    quadrature calls."""
    sol = airy_sol
    for tau in (-1.0, 0.5):
        h = sol.q ** 2
        G1 = sol.antiderivative(sol.tau_grid * h)
        G0 = sol.antiderivative(h)
        core = (float(G1[-1]) - sol.interp(G1, tau)) \
            - tau * (float(G0[-1]) - sol.interp(G0, tau))
        from fredtw.twsolver import _psi_subst, _tail_integral
        tail = _tail_integral(lambda s: _psi_subst(airy, s, "alt", tau),
                              sol.match_T, 1e-10)
        tw = math.exp(-(core + tail))
        assert abs(det_via_alternative(sol, airy, tau) - tw) <= 1e-10


def test_painleve_ii_residual(airy, airy_sol):
    """q'' - tau q - 2 q^3 with q'' from independent spectral double
    differentiation, at interior nodes."""
    worst = 0.0
    for p, s in airy_sol._slices():
        q = airy_sol.q[s]
        qpp = p.D @ (p.D @ q)
        r = qpp - p.nodes * q - 2.0 * q ** 3
        worst = max(worst, float(np.max(np.abs(r[1:-1]))))
    assert worst <= 1e-8


def test_bvp_vs_resolvent_nodewise(airy, airy_sol):
    for tau in (-2.0, -0.7, 1.3, 4.0):
        ref = endpoint_q(airy, tau)
        assert abs(airy_sol.interp(airy_sol.q, tau) - ref) \
            <= 1e-5 * max(abs(ref), 1e-12)


def test_psi_zero_guard():
    """With u0_ddot != 0 the equation contains 1/psi terms; a model
    whose psi changes sign inside the domain is refused."""
    m = damped_airy_model()
    # shift so that a zero of Ai (first zero near -2.338) enters
    bad = replace(m, psi=lambda x: np.asarray(np.cos(x), dtype=float),
                  psi_prime=lambda x: -np.asarray(np.sin(x), dtype=float))
    with pytest.raises(PsiTooSmall):
        solve_q(bad, -1.0)


@pytest.mark.xfail(
    strict=True,
    reason="for u0_ddot != 0 the closed q-equation inherits the failure "
           "of the order-scaling relation: the resolvent-defined q "
           "violates it at the 5e-2 relative level near the left edge; "
           "see notes/decisions.md")
def test_damped_resolvent_q_satisfies_closed_ode():
    m = damped_airy_model()
    tau, h = -1.0, 1e-4
    from fredtw.awf import build_awf, _rebuild
    from fredtw.fredholm import build_grid, discretize
    grid = build_grid(half_line(tau), model=m)
    tab = build_awf(m, discretize(m, grid), 1)
    q = tab.eval_chi(0, 0, tau)
    qp = tab.chi_total_deriv(0, 0)
    tp = _rebuild(m, tau + h, tab)
    tm = _rebuild(m, tau - h, tab)
    qpp = (tp.eval_chi(0, 0, tau + h) - 2.0 * q
           + tm.eval_chi(0, 0, tau - h)) / h ** 2
    M = tab.mu[1, 0] + tab.mu[0, 0]  # = int_tau^inf q^2 (shift identity)
    assert abs(qpp - _ode_rhs(m, tau, q, qp, M)) < 1e-6


def test_solver_config_defaults():
    cfg = SolverConfig()
    assert cfg.panel_degree >= 10
    assert cfg.match_tol == 1e-9
