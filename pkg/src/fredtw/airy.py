"""
Airy function Ai and its derivative, implemented from scratch.

Two regimes:

* |x| <= SEAM: the Maclaurin pair f, g summed in double-double arithmetic.
  The series converges everywhere but suffers catastrophic cancellation
  (the partial sums grow like e^{2 zeta} relative to Ai on the positive
  axis), so plain double precision is not enough; the compensated
  (hi, lo) representation keeps ~32 significant digits through the
  cancellation and leaves full double accuracy in the result.
* |x| > SEAM: the standard asymptotic expansions in zeta = (2/3)|x|^{3/2},
  summed to the smallest term.  At the seam zeta ~ 18 the optimally
  truncated series is accurate to ~1e-15 relative, so the two branches
  overlap far inside the target tolerance.

Everything is vectorized over numpy arrays; scalars in, scalars out.
"""

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1, Dekker splitting constant

# Ai(0) and Ai'(0) as double-double constants
_C1 = (0.3550280538878172, 2.05233632436212e-17)
_C2 = (0.2588194037928068, -2.522243111610832e-17)  # = -Ai'(0)

SEAM = 9.0
_N_SERIES = 80
_N_ASYMP = 46

_SQRTPI = 1.7724538509055160273


# ----------------------------------------------------------------------
# double-double primitives (error-free transformations), numpy-friendly

def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    ta = _SPLIT * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLIT * b
    bhi = tb - (tb - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    e = e + x[1] + y[1]
    return _quick_two_sum(s, e)


def _dd_mul(x, y):
    p, e = _two_prod(x[0], y[0])
    e = e + x[0] * y[1] + x[1] * y[0]
    return _quick_two_sum(p, e)


def _dd_mul_d(x, d):
    p, e = _two_prod(x[0], d)
    e = e + x[1] * d
    return _quick_two_sum(p, e)


def _dd_div_d(x, d):
    q1 = x[0] / d
    p, e = _two_prod(q1, d)
    r, re = _two_sum(x[0], -p)
    q2 = (r + (re - e + x[1])) / d
    return _quick_two_sum(q1, q2)


# ----------------------------------------------------------------------
# Maclaurin branch.  Ai = c1*f - c2*g with
#   f = sum_k 3^k (1/3)_k x^{3k} / (3k)!
#   g = sum_k 3^k (2/3)_k x^{3k+1} / (3k+1)!

def _series_branch(x):
    zero = np.zeros_like(x)
    x3 = _dd_mul_d(_two_prod(x, x), x)

    tf = (np.ones_like(x), zero)          # f terms, k = 0 up
    tg = (x.copy(), zero)                 # g terms
    x2 = _two_prod(x, x)
    tfp = (x2[0] / 2.0, x2[1] / 2.0)      # f' terms, k = 1 up
    tgp = (np.ones_like(x), zero)         # g' terms, k = 0 up

    f, g, gp = tf, tg, tgp
    fp = (zero.copy(), zero.copy())
    for k in range(1, _N_SERIES):
        tf = _dd_div_d(_dd_mul(tf, x3), float((3 * k - 1) * (3 * k)))
        tg = _dd_div_d(_dd_mul(tg, x3), float((3 * k) * (3 * k + 1)))
        # f' terms s_k = 3k a_k x^{3k-1}:   s_k/s_{k-1} = x^3 k / ((k-1)(3k-1)(3k))
        if k >= 2:
            tfp = _dd_div_d(_dd_mul_d(_dd_mul(tfp, x3), float(k)),
                            float((k - 1) * (3 * k - 1) * (3 * k)))
        # g' terms t_k = (3k+1) b_k x^{3k}: t_{k+1}/t_k = x^3 / ((3k+1)(3k+3))
        tgp = _dd_div_d(_dd_mul(tgp, x3), float((3 * k - 2) * (3 * k)))
        f = _dd_add(f, tf)
        g = _dd_add(g, tg)
        fp = _dd_add(fp, tfp)
        gp = _dd_add(gp, tgp)
        if k % 8 == 0 and np.all(np.abs(tf[0]) < 1e-45 * (1.0 + np.abs(f[0]))):
            break

    ai = _dd_add(_dd_mul(_C1, f), _dd_mul(_dd_mul_d(_C2, -1.0), g))
    aip = _dd_add(_dd_mul(_C1, fp), _dd_mul(_dd_mul_d(_C2, -1.0), gp))
    return ai[0] + ai[1], aip[0] + aip[1]


# ----------------------------------------------------------------------
# asymptotic branch.  u_k = Gamma(3k+1/2) / (54^k k! Gamma(k+1/2)),
# v_k = (6k+1)/(1-6k) u_k; both precomputed by their recurrences.

def _uv_tables():
    u = [1.0]
    for k in range(1, _N_ASYMP):
        u.append(u[-1] * (3 * k - 0.5) * (3 * k - 1.5) * (3 * k - 2.5)
                 / (54.0 * k * (k - 0.5)))
    u = np.array(u)
    k = np.arange(_N_ASYMP)
    v = u * (6 * k + 1) / (1.0 - 6 * k)
    v[0] = 1.0
    return u, v


_U, _V = _uv_tables()


def _trunc_sum(zeta, terms):
    """Sum an asymptotic term sequence element-wise, truncating each
    entry of `zeta` at its smallest term (classical optimal truncation)."""
    s = np.zeros_like(zeta)
    prev = np.full_like(zeta, np.inf)
    active = np.ones_like(zeta, dtype=bool)
    for t in terms:
        mag = np.abs(t)
        active = active & (mag < prev)
        if not np.any(active):
            break
        s = np.where(active, s + t, s)
        prev = np.where(active, mag, prev)
    return s


def _asymp_pos(x):
    zeta = (2.0 / 3.0) * x ** 1.5
    zk = [zeta ** (-float(k)) for k in range(_N_ASYMP)]
    s_ai = _trunc_sum(zeta, ((-1.0) ** k * _U[k] * zk[k]
                             for k in range(_N_ASYMP)))
    s_aip = _trunc_sum(zeta, ((-1.0) ** k * _V[k] * zk[k]
                              for k in range(_N_ASYMP)))
    pref = np.exp(-zeta) / (2.0 * _SQRTPI)
    ai = pref * s_ai / x ** 0.25
    aip = -pref * s_aip * x ** 0.25
    return ai, aip


def _asymp_neg(x):
    t = -x
    zeta = (2.0 / 3.0) * t ** 1.5
    zk = [zeta ** (-float(k)) for k in range(_N_ASYMP)]
    c = np.cos(zeta - 0.25 * np.pi)
    s = np.sin(zeta - 0.25 * np.pi)
    even = range(0, _N_ASYMP, 2)
    odd = range(1, _N_ASYMP, 2)
    u_even = _trunc_sum(zeta, ((-1.0) ** (k // 2) * _U[k] * zk[k] for k in even))
    u_odd = _trunc_sum(zeta, ((-1.0) ** (k // 2) * _U[k] * zk[k] for k in odd))
    v_even = _trunc_sum(zeta, ((-1.0) ** (k // 2) * _V[k] * zk[k] for k in even))
    v_odd = _trunc_sum(zeta, ((-1.0) ** (k // 2) * _V[k] * zk[k] for k in odd))
    ai = (c * u_even + s * u_odd) / (_SQRTPI * t ** 0.25)
    aip = (t ** 0.25 / _SQRTPI) * (s * v_even - c * v_odd)
    return ai, aip


# ----------------------------------------------------------------------

def _ai_both(x):
    x = np.asarray(x, dtype=float)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    mid = np.abs(x) <= SEAM
    pos = x > SEAM
    neg = x < -SEAM
    if np.any(mid):
        ai[mid], aip[mid] = _series_branch(x[mid])
    if np.any(pos):
        ai[pos], aip[pos] = _asymp_pos(x[pos])
    if np.any(neg):
        ai[neg], aip[neg] = _asymp_neg(x[neg])
    return ai, aip


def airy_ai(x):
    """Airy function Ai(x); scalar or ndarray."""
    a, _ = _ai_both(np.atleast_1d(x))
    return float(a[0]) if np.ndim(x) == 0 else a.reshape(np.shape(x))


def airy_ai_prime(x):
    """Derivative Ai'(x); scalar or ndarray."""
    _, ap = _ai_both(np.atleast_1d(x))
    return float(ap[0]) if np.ndim(x) == 0 else ap.reshape(np.shape(x))


def airy_ai_pair(x):
    """(Ai(x), Ai'(x)) evaluated in a single pass."""
    a, ap = _ai_both(np.atleast_1d(x))
    if np.ndim(x) == 0:
        return float(a[0]), float(ap[0])
    return a.reshape(np.shape(x)), ap.reshape(np.shape(x))
