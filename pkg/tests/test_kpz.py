import numpy as np
import pytest

from fredtw.airy import airy_ai
from fredtw.errors import WeightVanishes
from fredtw.fredholm import (GridConfig, build_grid, discretize_matrix,
                             gap_probability, half_line)
from fredtw.kernel import cd_kernel
from fredtw.kpz import (FiniteTempSpec, generic_ft_kernel, kpz_gap,
                        kpz_kernel, kpz_matrix, u_reparam_check,
                        _lambda_cuts)


def test_spec_validation():
    with pytest.raises(ValueError):
        FiniteTempSpec(-1.0, 2.0)
    with pytest.raises(ValueError):
        FiniteTempSpec(1.0, 0.0)
    s = FiniteTempSpec(1.0, 2.0)
    assert s.phi is airy_ai and s.gamma == 1.0


def test_fermi_weight_limits():
    s = FiniteTempSpec(1.0, 20.0)
    w = s.fermi(np.array([-5.0, 0.0, 5.0]))
    assert w[0] < 1e-40
    assert w[1] == pytest.approx(0.5)
    assert w[2] == pytest.approx(1.0, abs=1e-10)


def test_symmetry():
    s = FiniteTempSpec(1.0, 10.0)
    assert kpz_kernel(s, 0.3, 1.7) == kpz_kernel(s, 1.7, 0.3)


def test_zero_temperature_limit_kernel(airy):
    s = FiniteTempSpec(1.0, 40.0)
    assert abs(kpz_kernel(s, 1.0, 2.0) - cd_kernel(airy, 1.0, 2.0)) < 1e-3


def test_zero_phi():
    z = lambda w: np.zeros_like(np.asarray(w, dtype=float))
    s = FiniteTempSpec(1.0, 2.0, phi=z)
    assert kpz_kernel(s, 0.0, 1.0) == 0.0
    assert generic_ft_kernel(z, lambda l: np.ones_like(l), 1.0,
                             0.0, 5.0, 0.0, 1.0) == 0.0


def test_generic_unit_weight_is_airy_kernel(airy):
    v = generic_ft_kernel(airy_ai, lambda l: np.ones_like(l), 1.0,
                          0.0, 40.0, 0.0, 1.0)
    assert abs(v - cd_kernel(airy, 0.0, 1.0)) < 1e-8


def test_generic_reproduces_fermi_kernel():
    s = FiniteTempSpec(1.0, 2.0)
    lo, hi = _lambda_cuts(s, 1.0, 1e-10)
    v = generic_ft_kernel(airy_ai,
                          lambda l: -(1.0 * np.exp(-2.0 * l) + 1.0),
                          1.0, hi, lo, 1.0, 2.0)  # reversed = sign flip
    assert abs(v - kpz_kernel(s, 1.0, 2.0)) < 1e-9


def test_weight_vanishes_guard():
    flat = lambda l: np.full_like(np.asarray(l, dtype=float), 1e-16)
    with pytest.raises(WeightVanishes):
        generic_ft_kernel(airy_ai, flat, 1.0, -1.0, 1.0, 0.0, 0.0)


def test_gap_far_tail():
    assert kpz_gap(FiniteTempSpec(1.0, 20.0), 8.0) >= 1.0 - 1e-6


def test_gap_bounds_and_monotone_tau():
    s = FiniteTempSpec(1.0, 10.0)
    vals = [kpz_gap(s, t) for t in (-2.0, 0.0, 2.0, 4.0)]
    assert all(0.0 < v <= 1.0 for v in vals)
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_discretized_spectrum_in_unit_interval():
    """Report-style check: the symmetrized kernel matrix has spectrum in
    [0, 1) -- a positive-definite smoothed projection."""
    s = FiniteTempSpec(1.0, 10.0)
    grid = build_grid(half_line(0.0), GridConfig())
    disc = discretize_matrix(kpz_matrix(s, grid.nodes), grid)
    ev = np.linalg.eigvalsh(disc.Ktil)
    assert ev.min() > -1e-12
    assert ev.max() < 1.0


def test_u_reparam_closed_form():
    assert u_reparam_check(FiniteTempSpec(1.0, 1.0), 10.0, 50) <= 1e-8
    # c1 -> 0: the flow is exactly u = u_ref - x
    assert u_reparam_check(FiniteTempSpec(1e-14, 1.0), 5.0, 20) <= 1e-10
    with pytest.raises(ValueError):
        u_reparam_check(FiniteTempSpec(1.0, 1.0), float("inf"))
