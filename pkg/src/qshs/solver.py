"""Four-step ADMM for constrained image restoration from masked Fourier
measurements.

The problem: minimize over images u in the constraint set S

    1/2 ||T u - m||^2 + rho * penalty(L u)

where T is the masked unitary 2-D DFT, L is the per-pixel Hessian map (or
the gradient map for the TV baseline), and the penalty is the method's
per-pixel matrix/vector norm surrogate. Splitting u = v (for the constraint)
and L u = H (for the penalty) gives an augmented Lagrangian whose ADMM sweep
is, per iteration:

    1. v    <- project(u + u_hat / beta)                onto S
    2. H_r  <- prox(rho/beta)([L u]_r + [H_hat]_r / beta)  per pixel
    3. u    <- exact Fourier-diagonal solve of the normal equations
    4. u_hat += beta (u - v);  H_hat_r += beta ([L u]_r - H_r)

Step 3 exploits that T*T, L^T L, and I are simultaneously diagonal in the
DFT basis under periodic boundaries. Because the adjoint projects to real
images, the real-restricted data normal operator acts not by the raw 0/1
mask spectrum but by its frequency-symmetrized version (M(w) + M(-w))/2;
using the symmetrized spectrum is what makes the solve exact rather than
approximate.

Step 2's effective threshold is rho/beta: dividing the per-pixel subproblem
(beta/2)||M - H||^2 + rho f(H) by beta puts it in unit-quadratic form. For
the q-shrinkage penalty this substitution also fixes the shrinkage family's
internal parameter, so the monitored objective uses rho_eff = rho/beta.

beta policy: when the config leaves beta unset it defaults to 1.0; if a run
produces non-finite iterates, beta is doubled and the run restarted from
zero, up to 4 times. An explicitly chosen beta fails fast instead. Keeping
the default independent of rho matters for the non-convex penalty: rho_eff =
rho/beta sets the dead-zone width, and tying beta to rho would freeze
rho_eff at a constant, collapsing the penalty family to a single shape no
matter how rho is tuned.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import diffops, kernels
from .forward import forward_adjoint, forward_apply
from .grids import as_kspace, as_mask, zeros_image
from .shrinkage import ShrinkParams, qshs_penalty

METHODS = ("qshs", "hs1", "hs2", "tv1")

_BOX_RE = re.compile(r"^box\(\s*([^,\s]+)\s*,\s*([^,\s)]+)\s*\)$")


class SolverDivergenceError(RuntimeError):
    """Raised when an iterate goes non-finite; names the step and iteration."""

    def __init__(self, step: str, iteration: int):
        super().__init__(f"solver diverged at {step} on iteration {iteration}")
        self.step = step
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    rho: float
    beta: float | None = None  # None -> 1.0 with divergence restarts
    q: float = 0.5
    max_iters: int = 1000
    primal_tol: float = 1e-4
    method: str = "qshs"
    constraint_set: str = "positive-orthant"

    def __post_init__(self):
        if not (self.rho > 0):
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.beta is not None and not (self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not (0.0 < self.q <= 1.0):
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.primal_tol > 0):
            raise ValueError(f"primal_tol must be > 0, got {self.primal_tol}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        _parse_constraint(self.constraint_set)  # validates

    @property
    def beta_effective(self) -> float:
        return self.beta if self.beta is not None else 1.0


@dataclass
class SolverState:
    u: np.ndarray
    v: np.ndarray
    H: np.ndarray
    u_hat: np.ndarray
    H_hat: np.ndarray
    iter: int = 0


@dataclass(frozen=True)
class ReconResult:
    u_final: np.ndarray
    objective_trace: np.ndarray
    primal_residual_u_trace: np.ndarray
    primal_residual_H_trace: np.ndarray
    u_norm_trace: np.ndarray
    iterations_run: int
    converged: bool


def _parse_constraint(spec: str):
    """Return a projection callable for a constraint-set name."""
    if spec == "positive-orthant":
        return lambda x: np.maximum(x, 0.0)
    if spec == "unconstrained":
        return lambda x: x
    m = _BOX_RE.match(spec)
    if m:
        lo, hi = float(m.group(1)), float(m.group(2))
        if not lo < hi:
            raise ValueError(f"box bounds must satisfy lo < hi, got {spec!r}")
        return lambda x: np.clip(x, lo, hi)
    raise ValueError(
        f"unknown constraint set {spec!r}; expected 'positive-orthant', "
        f"'unconstrained', or 'box(lo,hi)'")


def _ops(cfg: SolverConfig):
    """(apply, adjoint, symbol) triple of the method's splitting operator."""
    if cfg.method == "tv1":
        return diffops.grad_apply, diffops.grad_adjoint, diffops.grad_symbol
    return diffops.hessian_apply, diffops.hessian_adjoint, diffops.hessian_symbol


def _field_prox(field: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    """Per-pixel prox of the method's penalty at threshold rho/beta."""
    tau = cfg.rho / cfg.beta_effective
    if cfg.method in ("qshs", "hs1"):
        q = cfg.q if cfg.method == "qshs" else 1.0
        return kernels.spectral_prox(field, q, tau)
    # Frobenius / Euclidean block shrink (hs2 on 2x2 blocks, tv1 on pairs)
    flat = field.reshape(field.shape[0], field.shape[1], -1)
    nrm = np.sqrt((flat * flat).sum(axis=2))
    fac = np.zeros_like(nrm)
    np.divide(nrm - tau, nrm, out=fac, where=nrm > tau)
    return field * fac.reshape(nrm.shape + (1,) * (field.ndim - 2))


def _field_penalty(field: np.ndarray, cfg: SolverConfig) -> float:
    """The method's penalty value (without the rho weight)."""
    if cfg.method in ("qshs", "hs1"):
        # hs1 is the q=1 member; sharing the accumulation path keeps
        # solve(qshs, q=1) and solve(hs1) bit-identical including traces
        q = cfg.q if cfg.method == "qshs" else 1.0
        return qshs_penalty(field, ShrinkParams(q, cfg.rho / cfg.beta_effective))
    flat = field.reshape(field.shape[0], field.shape[1], -1)
    return float(np.sqrt((flat * flat).sum(axis=2)).sum())


def step_v(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """Constraint projection: v = P_S(u + u_hat/beta)."""
    project = _parse_constraint(cfg.constraint_set)
    return project(state.u + state.u_hat / cfg.beta_effective)


def step_H(state: SolverState, cfg: SolverConfig, Lu: np.ndarray | None = None) -> np.ndarray:
    """Per-pixel prox at argument L u + H_hat/beta, threshold rho/beta."""
    if Lu is None:
        Lu = _ops(cfg)[0](state.u)
    return _field_prox(Lu + state.H_hat / cfg.beta_effective, cfg)


def step_u(state: SolverState, cfg: SolverConfig, m, mask, symbol) -> np.ndarray:
    """Exact frequency-domain solve of the quadratic normal equations.

    (T*T + beta (L^T L + I)) u = T*m + beta v - u_hat + L^T(beta H - H_hat),
    realized per frequency as division by msym + beta*(symbol + 1) where
    msym is the symmetrized mask spectrum (real-image restriction of T*T).
    """
    beta = cfg.beta_effective
    adjoint = _ops(cfg)[1]
    rhs = (forward_adjoint(m, mask) + beta * state.v - state.u_hat
           + adjoint(beta * state.H - state.H_hat))
    mf = as_mask(mask).astype(np.float64)
    msym = 0.5 * (mf + _reverse_spectrum(mf))
    denom = msym + beta * (symbol + 1.0)
    if denom.min() <= 0.0:
        raise RuntimeError("non-positive Step-3 denominator; beta must be > 0")
    return np.real(np.fft.ifft2(np.fft.fft2(rhs, norm="ortho") / denom, norm="ortho"))


def step_duals(state: SolverState, cfg: SolverConfig, Lu: np.ndarray | None = None):
    """Multiplier ascent: u_hat += beta(u - v), H_hat += beta(L u - H)."""
    beta = cfg.beta_effective
    if Lu is None:
        Lu = _ops(cfg)[0](state.u)
    return state.u_hat + beta * (state.u - state.v), state.H_hat + beta * (Lu - state.H)


def _reverse_spectrum(a: np.ndarray) -> np.ndarray:
    # value at -w for each frequency w of an fft2-indexed array
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


def objective(u, m, mask, cfg: SolverConfig) -> float:
    """1/2 ||T u - m||^2 on sampled bins plus rho times the method penalty
    of the split operator applied to u."""
    m = as_kspace(m)
    mask = as_mask(mask)
    diff = forward_apply(u, mask) - np.where(mask, m, 0.0)
    data = 0.5 * float(np.sum(np.abs(diff) ** 2))
    Lu = _ops(cfg)[0](u)
    return data + cfg.rho * _field_penalty(Lu, cfg)


def _check_finite(arrs, step: str, iteration: int):
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise SolverDivergenceError(step, iteration)


def _run(m, mask, cfg: SolverConfig) -> ReconResult:
    n = mask.shape[0]
    apply_op = _ops(cfg)[0]
    symbol = _ops(cfg)[2](n, mask.shape[1])
    zero_field = np.zeros_like(apply_op(zeros_image(n)))
    state = SolverState(u=zeros_image(n), v=zeros_image(n), H=zero_field.copy(),
                        u_hat=zeros_image(n), H_hat=zero_field.copy())
    Lu = zero_field
    obj_trace, ru_trace, rH_trace, unorm_trace = [], [], [], []
    converged = False
    for k in range(1, cfg.max_iters + 1):
        state.v = step_v(state, cfg)
        _check_finite((state.v,), "step_v", k)
        state.H = step_H(state, cfg, Lu=Lu)
        _check_finite((state.H,), "step_H", k)
        state.u = step_u(state, cfg, m, mask, symbol)
        _check_finite((state.u,), "step_u", k)
        Lu = apply_op(state.u)
        state.u_hat, state.H_hat = step_duals(state, cfg, Lu=Lu)
        _check_finite((state.u_hat, state.H_hat), "step_duals", k)
        state.iter = k
        ru = float(np.linalg.norm(state.u - state.v)) \
            / max(float(np.linalg.norm(state.u)), 1e-30)
        rH = float(np.linalg.norm((Lu - state.H).ravel())) \
            / max(float(np.linalg.norm(Lu.ravel())), 1e-30)
        ru_trace.append(ru)
        rH_trace.append(rH)
        unorm_trace.append(float(np.linalg.norm(state.u)))
        obj_trace.append(objective(state.u, m, mask, cfg))
        if ru < cfg.primal_tol and rH < cfg.primal_tol:
            converged = True
            break
    return ReconResult(u_final=state.u,
                       objective_trace=np.asarray(obj_trace),
                       primal_residual_u_trace=np.asarray(ru_trace),
                       primal_residual_H_trace=np.asarray(rH_trace),
                       u_norm_trace=np.asarray(unorm_trace),
                       iterations_run=state.iter,
                       converged=converged)


def solve(m, mask, cfg: SolverConfig) -> ReconResult:
    """Run the four-step sweep from zero initialization until both relative
    primal residuals drop below primal_tol or max_iters is reached.

    Requires the DC bin sampled (constants must be observed for the problem
    to be coercive). With beta unset, divergence triggers doubling restarts.
    """
    m = as_kspace(m)
    mask = as_mask(mask)
    if m.shape != mask.shape:
        raise ValueError(f"measurement shape {m.shape} does not match mask {mask.shape}")
    if not mask[0, 0]:
        raise ValueError("mask must sample the DC bin")
    if cfg.beta is not None:
        return _run(m, mask, cfg)
    beta = cfg.beta_effective
    for attempt in range(5):
        try:
            return _run(m, mask, replace(cfg, beta=beta))
        except SolverDivergenceError:
            if attempt == 4:
                raise
            beta *= 2.0
    raise AssertionError("unreachable")


def method_penalty_value(field, cfg: SolverConfig) -> float:
    """Penalty (without rho) of an already-computed operator field."""
    return _field_penalty(np.asarray(field, dtype=np.float64), cfg)
