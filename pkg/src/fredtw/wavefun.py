"""
Wave-function models: the boundary data (psi, psi', gamma, u0_dot, ...)
that seeds every kernel, plus regularity probes.

A model optionally carries the full profile (u(x), phi(omega)) so the
kernel can also be computed by direct x-integration as a cross-check.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .airy import airy_ai, airy_ai_prime


@dataclass(frozen=True)
class WaveModel:
    """Boundary wave-function data.  Evaluators must be pure and accept
    numpy arrays; the model is immutable after construction."""
    psi: Callable
    psi_prime: Callable
    gamma: float = 1.0
    u0: float = 0.0
    u0_dot: float = 1.0
    u0_ddot: float = 0.0
    v0: float = 0.0
    # optional (u, phi) pair for the direct-integral kernel oracle
    profile: Optional[Tuple[Callable, Callable]] = None
    name: str = "custom"

    def __post_init__(self):
        if self.gamma == 0.0:
            raise ValueError("gamma must be nonzero")
        if self.u0_dot == 0.0:
            raise ValueError("u0_dot must be nonzero")


@dataclass(frozen=True)
class RegularityReport:
    decay_ok: bool
    ratio_ok: bool            # gamma/u0_dot well defined and nonzero
    min_abs_psi: float
    argmin_psi: float
    psi_vanishes: bool        # psi == 0 on the whole probe
    profile_consistent: Optional[bool] = None

    @property
    def all_ok(self):
        return self.decay_ok and self.ratio_ok and not self.psi_vanishes


def airy_model():
    """The Airy model: psi = Ai, gamma = u0_dot = 1, u0_ddot = v0 = 0.
    Profile u(x) = x, phi = Ai gives the classical Airy kernel."""
    return WaveModel(
        psi=airy_ai,
        psi_prime=airy_ai_prime,
        gamma=1.0, u0=0.0, u0_dot=1.0, u0_ddot=0.0, v0=0.0,
        profile=(lambda x: np.asarray(x, dtype=float), airy_ai),
        name="airy",
    )


def damped_airy_model(u0_ddot=0.3):
    """A genuinely non-Airy model with u0_ddot != 0.

    phi(w) = exp(-c w / 2) Ai(w + c^2/4) with c = u0_ddot solves
    phi'' + c phi' = w phi, which is exactly the second-derivative
    relation psi'' = (v0 + xi) psi - c psi' demanded of the boundary
    data with gamma = u0_dot = 1, u0 = v0 = 0.  The profile
    u(x) = x + (c/2) x^2 has the matching jet at x = 0.
    """
    c = float(u0_ddot)
    sh = 0.25 * c * c

    def phi(w):
        w = np.asarray(w, dtype=float)
        return np.exp(-0.5 * c * w) * airy_ai(w + sh)

    def psi(xi):
        return phi(xi)

    def psi_prime(xi):
        xi = np.asarray(xi, dtype=float)
        e = np.exp(-0.5 * c * xi)
        return e * (airy_ai_prime(xi + sh) - 0.5 * c * airy_ai(xi + sh))

    def u(x):
        x = np.asarray(x, dtype=float)
        return x + 0.5 * c * x * x

    return WaveModel(psi=psi, psi_prime=psi_prime,
                     gamma=1.0, u0=0.0, u0_dot=1.0, u0_ddot=c, v0=0.0,
                     profile=(u, phi), name="damped_airy")


def zero_model():
    """psi identically zero; useful for trivial-limit checks."""
    z = lambda xi: np.zeros_like(np.asarray(xi, dtype=float))
    return WaveModel(psi=z, psi_prime=z, name="zero")


def tabulated_model(xi, psi_vals, psi_prime_vals, *, gamma=1.0, u0=0.0,
                    u0_dot=1.0, u0_ddot=0.0, v0=0.0, name="tabulated"):
    """Model backed by cubic interpolation of sampled (xi, psi, psi')."""
    from scipy.interpolate import CubicSpline
    xi = np.asarray(xi, dtype=float)
    sp = CubicSpline(xi, np.asarray(psi_vals, dtype=float))
    spp = CubicSpline(xi, np.asarray(psi_prime_vals, dtype=float))
    return WaveModel(psi=lambda x: sp(x), psi_prime=lambda x: spp(x),
                     gamma=gamma, u0=u0, u0_dot=u0_dot, u0_ddot=u0_ddot,
                     v0=v0, name=name)


def eval_psi(model, xi):
    """psi(xi); scalar in, scalar out."""
    v = model.psi(np.asarray(xi, dtype=float))
    return float(v) if np.ndim(xi) == 0 else np.asarray(v)


def psi_second(model, xi):
    """psi''(xi) = (gamma^2/u0_dot^2)((v0 + xi) psi - (u0_ddot/gamma) psi').

    This relation is the only source of psi'' anywhere in the library;
    no finite differencing of the model evaluators is ever performed.
    """
    xi = np.asarray(xi, dtype=float)
    g, ud, udd = model.gamma, model.u0_dot, model.u0_ddot
    out = (g * g / ud ** 2) * ((model.v0 + xi) * model.psi(xi)
                               - (udd / g) * model.psi_prime(xi))
    return float(out) if out.ndim == 0 else out


def check_regularity(model, probe):
    """Probe-grid checks of the decay and non-vanishing hypotheses.
    Report-only: nothing raises."""
    probe = np.sort(np.asarray(probe, dtype=float))
    vals = np.abs(np.asarray(model.psi(probe), dtype=float))

    psi_vanishes = bool(np.all(vals == 0.0))

    # decay proxy: |psi| eventually monotonically decreasing toward zero
    # on a window past the last probe point
    tail = probe[-1] + np.linspace(0.0, 20.0, 81)
    tv = np.abs(np.asarray(model.psi(tail), dtype=float))
    decay_ok = bool(np.all(np.diff(tv) <= 1e-14 + 1e-10 * tv[:-1])
                    and tv[-1] <= tv[0])
    if psi_vanishes:
        decay_ok = True

    ratio = model.gamma / model.u0_dot
    ratio_ok = np.isfinite(ratio) and ratio != 0.0

    imin = int(np.argmin(vals))

    profile_consistent = None
    if model.profile is not None:
        u, phi = model.profile
        ref = np.asarray(phi(float(u(0.0)) + model.gamma * probe), dtype=float)
        scale = np.maximum(np.abs(ref), 1e-300)
        profile_consistent = bool(
            np.max(np.abs(ref - np.asarray(model.psi(probe))) / scale) < 1e-10)

    return RegularityReport(
        decay_ok=decay_ok, ratio_ok=bool(ratio_ok),
        min_abs_psi=float(vals[imin]), argmin_psi=float(probe[imin]),
        psi_vanishes=psi_vanishes, profile_consistent=profile_consistent)
