"""Hot per-pixel kernels: batched closed-form 2x2 SVD, spectral q-shrinkage,
and penalty accumulation.

Two interchangeable implementations live here. The numba path jit-compiles
scalar loops; the numpy path is fully vectorized. Selection happens once at
import: QSHS_PURE_NUMPY=1 (or a missing numba) picks the numpy path. Both
paths are exercised by the test suite and timed by benchmarks/bench_kernels.py.
One exception from measurement: the penalty reduction dispatches to numpy
even when numba is on, because it is pow-bound and the vectorized pow wins.

Scalar building blocks (shrink_scalar, sq_inverse_scalar, gq_scalar) are
shared with the public shrinkage API; under numba they compile to machine
code, otherwise they run as plain Python.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _env_pure_numpy() -> bool:
    return os.environ.get("QSHS_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    numba = None
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and not _env_pure_numpy()


def _jit(func):
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func


# ---------------------------------------------------------------------------
# scalar shrinkage pieces
# ---------------------------------------------------------------------------

@_jit
def shrink_scalar(x: float, q: float, rho_eff: float) -> float:
    # s_q(x) = max(|x| - rho^(2-q) |x|^(q-1), 0) * sign(x); dead zone [0, rho]
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if rho_eff == 0.0:
        return x
    if ax <= rho_eff:
        return 0.0
    m = ax - rho_eff ** (2.0 - q) * ax ** (q - 1.0)
    if m <= 0.0:
        return 0.0
    return m if x > 0.0 else -m


@_jit
def sq_inverse_scalar(t: float, q: float, rho_eff: float) -> float:
    # Solve shrink_scalar(x) = t for x >= rho_eff, t > 0, by monotone
    # bisection. The shrink amount rho^(2-q) x^(q-1) decreases in x, so
    # hi = t + amount(lo) + 1 always brackets; doubling is pure insurance.
    if q == 1.0:
        return t + rho_eff
    lo = t if t > rho_eff else rho_eff
    width = rho_eff ** (2.0 - q) * lo ** (q - 1.0) + 1.0
    hi = t + width
    guard = 0
    while shrink_scalar(hi, q, rho_eff) < t:
        width *= 2.0
        hi = t + width
        guard += 1
        if guard > 64:
            return math.nan
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            return mid  # bracket at floating-point resolution
        if shrink_scalar(mid, q, rho_eff) < t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12:
            return 0.5 * (lo + hi)
    return math.nan


@_jit
def _sq_inverse_newton_scalar(t: float, q: float, rho_eff: float) -> float:
    # Newton for s_q(x) = t from x0 = max(t, lam). s_q is concave and
    # increasing on [lam, inf), so tangent roots approach the solution
    # monotonically from the left: no safeguards needed beyond a progress
    # check at floating-point resolution. ~6 iterations vs ~45 bisections.
    if q == 1.0:
        return t + rho_eff
    lam = rho_eff
    x = t if t > lam else lam
    c = rho_eff ** (2.0 - q)
    for _ in range(100):
        pw = x ** (q - 1.0)
        resid = t - (x - c * pw)
        if resid <= 0.0:
            break
        x_new = x + resid / (1.0 + (1.0 - q) * c * pw / x)
        if x_new <= x:
            break
        x = x_new
    return x


@_jit
def gq_scalar(t: float, q: float, rho_eff: float) -> float:
    # g_q(t) = integral_0^t g_q'(tau) dtau, evaluated in closed form through
    # the substitution tau = s_q(x):
    #   g_q(t) = rho^(1-q) (X^q - lam^q)/q - rho^(3-2q) (X^(2q-2) - lam^(2q-2))/2
    # with X = s_q^{-1}(t) and lam = rho_eff. Exact for q in (0,1]; the q=1
    # limit is g_1(t) = t.
    if t <= 0.0:
        return 0.0
    if q == 1.0:
        return t
    if rho_eff == 0.0:
        return 0.0  # shrink degenerates to identity, implicit penalty vanishes
    lam = rho_eff
    X = _sq_inverse_newton_scalar(t, q, rho_eff)
    term1 = rho_eff ** (1.0 - q) * (X ** q - lam ** q) / q
    term2 = 0.5 * rho_eff ** (3.0 - 2.0 * q) * (X ** (2.0 * q - 2.0) - lam ** (2.0 * q - 2.0))
    return term1 - term2


# ---------------------------------------------------------------------------
# numba loops
# ---------------------------------------------------------------------------

@_jit
def _prox_loop(flat, out, q, rho_eff):
    # flat, out: (npix, 2, 2). Closed-form SVD per pixel, shrink both
    # singular values, rebuild. sy may be negative: its sign rides on t2.
    npix = flat.shape[0]
    for i in range(npix):
        a = flat[i, 0, 0]
        b = flat[i, 0, 1]
        c = flat[i, 1, 0]
        d = flat[i, 1, 1]
        e = 0.5 * (a + d)
        f = 0.5 * (a - d)
        g = 0.5 * (c + b)
        h = 0.5 * (c - b)
        qq = math.hypot(e, h)
        rr = math.hypot(f, g)
        s1 = qq + rr
        s2 = qq - rr
        t1 = shrink_scalar(s1, q, rho_eff)
        if t1 == 0.0:
            # s1 is the spectral norm; both outputs vanish
            out[i, 0, 0] = 0.0
            out[i, 0, 1] = 0.0
            out[i, 1, 0] = 0.0
            out[i, 1, 1] = 0.0
            continue
        t2 = shrink_scalar(s2, q, rho_eff)
        a1 = math.atan2(g, f)
        a2 = math.atan2(h, e)
        phi = 0.5 * (a2 + a1)
        theta = 0.5 * (a1 - a2)
        cu = math.cos(phi)
        su = math.sin(phi)
        cv = math.cos(theta)
        sv = math.sin(theta)
        out[i, 0, 0] = t1 * cu * cv + t2 * su * sv
        out[i, 0, 1] = t1 * cu * sv - t2 * su * cv
        out[i, 1, 0] = t1 * su * cv - t2 * cu * sv
        out[i, 1, 1] = t1 * su * sv + t2 * cu * cv


@_jit
def _gq_fast(t, q, lam, c, amp, curv, shift):
    # gq_scalar with the per-call constants hoisted out; the Newton loop
    # keeps pw = x^(q-1) current so the closed form needs no further pow:
    # x^q = x*pw and x^(2q-2) = pw^2
    if t <= 0.0:
        return 0.0
    x = t if t > lam else lam
    pw = x ** (q - 1.0)
    for _ in range(100):
        resid = t - (x - c * pw)
        if resid <= 0.0:
            break
        x_new = x + resid / (1.0 + (1.0 - q) * c * pw / x)
        if x_new <= x:
            break
        x = x_new
        pw = x ** (q - 1.0)
    return amp * x * pw - curv * pw * pw + shift


@_jit
def _penalty_loop(flat, q, rho_eff):
    npix = flat.shape[0]
    if q == 1.0 or rho_eff == 0.0:
        total = 0.0
        for i in range(npix):
            a = flat[i, 0, 0]
            b = flat[i, 0, 1]
            c = flat[i, 1, 0]
            d = flat[i, 1, 1]
            qq = math.hypot(0.5 * (a + d), 0.5 * (c - b))
            rr = math.hypot(0.5 * (a - d), 0.5 * (c + b))
            if q == 1.0:
                total += qq + rr + abs(qq - rr)
        return total
    lam = rho_eff
    cc = rho_eff ** (2.0 - q)
    amp = rho_eff ** (1.0 - q) / q
    curv = 0.5 * rho_eff ** (3.0 - 2.0 * q)
    # g(lam) = 0 fixes the constant: shift = -amp*lam^q + curv*lam^(2q-2)
    shift = 0.5 * rho_eff - rho_eff / q
    total = 0.0
    for i in range(npix):
        a = flat[i, 0, 0]
        b = flat[i, 0, 1]
        c = flat[i, 1, 0]
        d = flat[i, 1, 1]
        qq = math.hypot(0.5 * (a + d), 0.5 * (c - b))
        rr = math.hypot(0.5 * (a - d), 0.5 * (c + b))
        total += _gq_fast(qq + rr, q, lam, cc, amp, curv, shift)
        total += _gq_fast(abs(qq - rr), q, lam, cc, amp, curv, shift)
    return total


@_jit
def _singvals_loop(flat, out):
    npix = flat.shape[0]
    for i in range(npix):
        a = flat[i, 0, 0]
        b = flat[i, 0, 1]
        c = flat[i, 1, 0]
        d = flat[i, 1, 1]
        qq = math.hypot(0.5 * (a + d), 0.5 * (c - b))
        rr = math.hypot(0.5 * (a - d), 0.5 * (c + b))
        out[i, 0] = qq + rr
        out[i, 1] = abs(qq - rr)


# ---------------------------------------------------------------------------
# vectorized numpy path
# ---------------------------------------------------------------------------

def shrink_vec(s, q, rho_eff):
    """Vectorized shrink of non-negative values."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    if rho_eff == 0.0:
        return s.copy()
    pos = s > rho_eff
    sp = s[pos]
    out[pos] = np.maximum(sp - rho_eff ** (2.0 - q) * sp ** (q - 1.0), 0.0)
    return out


def sq_inverse_vec(t, q, rho_eff):
    """Vectorized monotone bisection for s_q^{-1} of positive values."""
    t = np.asarray(t, dtype=np.float64)
    if q == 1.0:
        return t + rho_eff
    lo = np.maximum(t, rho_eff)
    hi = t + rho_eff ** (2.0 - q) * lo ** (q - 1.0) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        stuck = (mid == lo) | (mid == hi)
        below = shrink_vec(mid, q, rho_eff) < t
        lo = np.where(below & ~stuck, mid, lo)
        hi = np.where(~below & ~stuck, mid, hi)
        if float((hi - lo).max(initial=0.0)) <= 1e-12 or stuck.all():
            break
    return 0.5 * (lo + hi)


def sq_inverse_newton_vec(t, q, rho_eff):
    """Vectorized monotone Newton for s_q^{-1}; same left-approach argument
    as the scalar version. sq_inverse_vec stays as the bisection reference."""
    t = np.asarray(t, dtype=np.float64)
    if q == 1.0:
        return t + rho_eff
    x = np.maximum(t, rho_eff)
    c = rho_eff ** (2.0 - q)
    for _ in range(100):
        pw = x ** (q - 1.0)
        resid = t - (x - c * pw)
        x_new = x + resid / (1.0 + (1.0 - q) * c * pw / x)
        advance = (resid > 0.0) & (x_new > x)
        if not advance.any():
            break
        x = np.where(advance, x_new, x)
    return x


def gq_vec(t, q, rho_eff):
    """Vectorized g_q via the closed-form antiderivative; zero for t <= 0.

    Runs the Newton inversion inline and keeps pw = X^(q-1) current, so the
    closed form costs no extra pow: X^q = X*pw, X^(2q-2) = pw^2.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0.0
    if not pos.any():
        return out
    if q == 1.0:
        out[pos] = t[pos]
        return out
    if rho_eff == 0.0:
        return out
    tp = t[pos]
    c = rho_eff ** (2.0 - q)
    x = np.maximum(tp, rho_eff)
    pw = x ** (q - 1.0)
    for _ in range(100):
        resid = tp - (x - c * pw)
        x_new = x + resid / (1.0 + (1.0 - q) * c * pw / x)
        advance = (resid > 0.0) & (x_new > x)
        if not advance.any():
            break
        x = np.where(advance, x_new, x)
        pw = x ** (q - 1.0)
    amp = rho_eff ** (1.0 - q) / q
    curv = 0.5 * rho_eff ** (3.0 - 2.0 * q)
    shift = 0.5 * rho_eff - rho_eff / q  # fixes g(lam) = 0
    out[pos] = amp * x * pw - curv * pw * pw + shift
    return out


def _svd_parts(flat):
    a = flat[:, 0, 0]
    b = flat[:, 0, 1]
    c = flat[:, 1, 0]
    d = flat[:, 1, 1]
    e = 0.5 * (a + d)
    f = 0.5 * (a - d)
    g = 0.5 * (c + b)
    h = 0.5 * (c - b)
    qq = np.hypot(e, h)
    rr = np.hypot(f, g)
    return e, f, g, h, qq, rr


def prox_numpy(flat, q, rho_eff):
    e, f, g, h, qq, rr = _svd_parts(flat)
    s1 = qq + rr
    s2 = qq - rr
    t1 = shrink_vec(s1, q, rho_eff)
    t2 = np.sign(s2) * shrink_vec(np.abs(s2), q, rho_eff)
    a1 = np.arctan2(g, f)
    a2 = np.arctan2(h, e)
    phi = 0.5 * (a2 + a1)
    theta = 0.5 * (a1 - a2)
    cu = np.cos(phi)
    su = np.sin(phi)
    cv = np.cos(theta)
    sv = np.sin(theta)
    out = np.empty_like(flat)
    out[:, 0, 0] = t1 * cu * cv + t2 * su * sv
    out[:, 0, 1] = t1 * cu * sv - t2 * su * cv
    out[:, 1, 0] = t1 * su * cv - t2 * cu * sv
    out[:, 1, 1] = t1 * su * sv + t2 * cu * cv
    return out


def penalty_numpy(flat, q, rho_eff):
    _, _, _, _, qq, rr = _svd_parts(flat)
    return float(gq_vec(qq + rr, q, rho_eff).sum() + gq_vec(np.abs(qq - rr), q, rho_eff).sum())


def singvals_numpy(flat):
    _, _, _, _, qq, rr = _svd_parts(flat)
    return np.stack([qq + rr, np.abs(qq - rr)], axis=1)


def prox_numba(flat, q, rho_eff):
    out = np.empty_like(flat)
    _prox_loop(flat, out, q, rho_eff)
    return out


def penalty_numba(flat, q, rho_eff):
    return float(_penalty_loop(flat, q, rho_eff))


def singvals_numba(flat):
    out = np.empty((flat.shape[0], 2), dtype=np.float64)
    _singvals_loop(flat, out)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _as_flat(field):
    flat = np.ascontiguousarray(field, dtype=np.float64).reshape(-1, 2, 2)
    return flat


def spectral_prox(field, q, rho_eff):
    """Per-pixel spectral q-shrinkage of a (..., 2, 2) matrix field."""
    flat = _as_flat(field)
    out = prox_numba(flat, q, rho_eff) if NUMBA_ENABLED else prox_numpy(flat, q, rho_eff)
    return out.reshape(np.shape(field))


def spectral_penalty(field, q, rho_eff):
    """Sum over pixels of g_q(sigma1) + g_q(sigma2).

    Always takes the vectorized path: this kernel is pow-bound and numpy's
    SIMD pow beats scalar libm pow in the jitted loop 2-3x at every size
    tried (see benchmarks/bench_kernels.py). penalty_numba stays available
    for comparison.
    """
    return penalty_numpy(_as_flat(field), q, rho_eff)


def singular_values(field):
    """Per-pixel singular-value pairs (descending) of a (..., 2, 2) field."""
    flat = _as_flat(field)
    out = singvals_numba(flat) if NUMBA_ENABLED else singvals_numpy(flat)
    return out.reshape(np.shape(field)[:-2] + (2,))
