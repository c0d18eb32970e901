"""Scalar q-shrinkage, its implicit penalty g_q, closed-form 2x2 SVD, and the
matrix proximal operators used by the reconstruction methods.

The shrinkage family
--------------------
For an exponent q in (0, 1] and a threshold weight rho_eff >= 0,

    s_q(x) = max(|x| - rho_eff^(2-q) |x|^(q-1), 0) * sign(x).

q = 1 is plain soft-thresholding. For q < 1 the shrink amount
rho_eff^(2-q) |x|^(q-1) decays as |x| grows, so large values pass almost
unchanged while small ones are zeroed: the operator interpolates between
soft and hard thresholding. The dead zone is [0, rho_eff] for every q
(set x = rho_eff^(2-q) x^(q-1) and solve).

s_q is the proximal operator of an implicit penalty: t = s_q(x) minimizes

    gamma(x, t) = rho_eff * g_q(t) + (t - x)^2 / 2

where g_q is even, g_q(0) = 0, and g_q'(t) = (s_q^{-1}(t) - t)/rho_eff on
t > 0. g_q has no elementary form in general, but the substitution
tau = s_q(x) turns its integral into one with an exact antiderivative, which
gq_value uses; gq_value_quad keeps the direct numeric quadrature as an
independent cross-check.

Matrix proxes act on singular values (von Neumann): shrink each sigma of the
2x2 input and rebuild with the same singular vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import kernels


@dataclass(frozen=True)
class ShrinkParams:
    """Exponent q in (0, 1] and non-negative threshold weight rho_eff."""

    q: float
    rho_eff: float

    def __post_init__(self):
        if not (0.0 < self.q <= 1.0):
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if not (self.rho_eff >= 0.0):
            raise ValueError(f"rho_eff must be >= 0, got {self.rho_eff}")


def scalar_shrink(x: float, p: ShrinkParams) -> float:
    """Apply s_q to a single value. Odd in x; |result| <= |x|."""
    return kernels.shrink_scalar(float(x), p.q, p.rho_eff)


def shrink_threshold(p: ShrinkParams) -> float:
    """Dead-zone edge: scalar_shrink is 0 on [0, lam], increasing beyond.

    For this shrinkage family the edge is rho_eff itself, independent of q.
    """
    return float(p.rho_eff)


def sq_inverse(t: float, p: ShrinkParams) -> float:
    """Inverse of scalar_shrink on t > 0 (the x with s_q(x) = t)."""
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    x = kernels.sq_inverse_scalar(float(t), p.q, p.rho_eff)
    if math.isnan(x):
        raise ArithmeticError(f"shrink inversion failed to converge at t={t}")
    return x


def gq_derivative(t: float, p: ShrinkParams) -> float:
    """g_q'(t) = (s_q^{-1}(t) - t) / rho_eff for t > 0.

    Lies in (0, 1], tends to 1 as t -> 0+, and decreases in t for q < 1
    (constant 1 for q = 1).
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    if p.rho_eff <= 0.0:
        raise ValueError("rho_eff must be > 0 to evaluate the penalty derivative")
    return (sq_inverse(t, p) - float(t)) / p.rho_eff


def gq_value(t, p: ShrinkParams):
    """Penalty g_q(t) = integral of g_q' from 0 to t, via the exact
    antiderivative in the s_q(x) substitution. Accepts scalars or arrays;
    negative inputs clamp to 0 (only t >= 0 is meaningful)."""
    arr = np.asarray(t, dtype=np.float64)
    out = kernels.gq_vec(arr, p.q, p.rho_eff)
    if np.ndim(t) == 0:
        return float(out)
    return out


def gq_value_quad(t: float, p: ShrinkParams) -> float:
    """g_q(t) by direct adaptive quadrature of gq_derivative.

    Slow path retained as an independent check of gq_value; agreement is
    asserted in the test suite.
    """
    t = float(t)
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return 0.0
    val, err = quad(lambda tau: gq_derivative(tau, p), 0.0, t,
                    epsabs=1e-10, epsrel=1e-10, limit=200)
    if not math.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
        raise ArithmeticError(f"quadrature failed at t={t}: value={val}, err={err}")
    return val


# ---------------------------------------------------------------------------
# 2x2 SVD and matrix proxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Svd2:
    """Real SVD of a 2x2 matrix: U @ diag(sigma1, sigma2) @ V.T, both factors
    orthogonal, sigma1 >= sigma2 >= 0."""

    U: np.ndarray
    sigma1: float
    sigma2: float
    V: np.ndarray


def _rot(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def svd2x2(M) -> Svd2:
    """Closed-form SVD of a real 2x2 matrix.

    Writes M as a rotation-scaling pair: with E=(a+d)/2, F=(a-d)/2,
    G=(c+b)/2, H=(c-b)/2, the singular values are hypot(E,H) +- hypot(F,G)
    and the factor angles come from atan2 of the pairs. A negative second
    "singular value" is made positive by flipping V's second column.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {M.shape}")
    a, b = M[0, 0], M[0, 1]
    c, d = M[1, 0], M[1, 1]
    e, f = 0.5 * (a + d), 0.5 * (a - d)
    g, h = 0.5 * (c + b), 0.5 * (c - b)
    qv = math.hypot(e, h)
    rv = math.hypot(f, g)
    a1 = math.atan2(g, f)
    a2 = math.atan2(h, e)
    U = _rot(0.5 * (a2 + a1))
    V = _rot(0.5 * (a1 - a2))
    s2 = qv - rv
    if s2 < 0.0:
        V = V.copy()
        V[:, 1] = -V[:, 1]
        s2 = -s2
    return Svd2(U=U, sigma1=qv + rv, sigma2=s2, V=V)


def qshs_matrix_prox(M, p: ShrinkParams) -> np.ndarray:
    """Spectral q-shrinkage: shrink both singular values of M, keep the
    singular vectors. Minimizer of rho_eff*(g_q(s1(H)) + g_q(s2(H))) +
    ||M - H||_F^2 / 2 over 2x2 matrices H."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {M.shape}")
    return kernels.spectral_prox(M.reshape(1, 2, 2), p.q, p.rho_eff).reshape(2, 2)


def hs1_matrix_prox(M, tau: float) -> np.ndarray:
    """Soft-threshold the singular values by tau (nuclear-norm prox)."""
    return qshs_matrix_prox(M, ShrinkParams(q=1.0, rho_eff=float(tau)))


def hs2_matrix_prox(M, tau: float) -> np.ndarray:
    """Frobenius block shrink: M * max(1 - tau/||M||_F, 0)."""
    M = np.asarray(M, dtype=np.float64)
    nrm = float(np.sqrt((M * M).sum()))
    if nrm <= tau:
        return np.zeros_like(M)
    return M * (1.0 - tau / nrm)


def tv1_vector_prox(gx: float, gy: float, tau: float):
    """Isotropic shrink of a gradient pair by its Euclidean magnitude."""
    mag = math.hypot(gx, gy)
    if mag <= tau:
        return 0.0, 0.0
    fac = 1.0 - tau / mag
    return gx * fac, gy * fac


def qshs_penalty(P, p: ShrinkParams) -> float:
    """Sum over pixels of g_q(sigma1) + g_q(sigma2) of a (n, n, 2, 2) field."""
    P = np.asarray(P, dtype=np.float64)
    if P.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing (2, 2) axes, got shape {P.shape}")
    return kernels.spectral_penalty(P, p.q, p.rho_eff)
