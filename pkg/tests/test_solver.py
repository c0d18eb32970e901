"""Four-step alternating solver: individual step contracts, full-solve
behavior on small problems, and configuration validation."""

import numpy as np
import pytest

from qshs.diffops import hessian_apply, hessian_symbol
from qshs.forward import (MaskSpec, NoiseSpec, dft2_forward, forward_apply,
                          make_mask, simulate_measurement)
from qshs.solver import (METHODS, ReconResult, SolverConfig,
                         SolverDivergenceError, SolverState, objective, solve,
                         step_H, step_duals, step_u, step_v)


def fresh_state(n):
    zf = np.zeros((n, n, 2, 2))
    return SolverState(u=np.zeros((n, n)), v=np.zeros((n, n)), H=zf.copy(),
                       u_hat=np.zeros((n, n)), H_hat=zf.copy())


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rho=0.0)
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, beta=-2.0)
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, q=0.0)
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, q=1.2)
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, method="ridge")
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, constraint_set="box(3,1)")
    with pytest.raises(ValueError):
        SolverConfig(rho=1.0, constraint_set="mystery")


def test_beta_default_and_override():
    assert SolverConfig(rho=0.7).beta_effective == 1.0
    assert SolverConfig(rho=0.7, beta=4.0).beta_effective == 4.0


def test_methods_tuple():
    assert METHODS == ("qshs", "hs1", "hs2", "tv1")


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def test_step_v_projects_negative_to_zero():
    st = fresh_state(4)
    st.u = np.full((4, 4), -3.0)
    out = step_v(st, SolverConfig(rho=1.0))
    assert np.all(out == 0.0)


def test_step_v_box_constraint():
    st = fresh_state(4)
    st.u = np.linspace(-1.0, 300.0, 16).reshape(4, 4)
    out = step_v(st, SolverConfig(rho=1.0, constraint_set="box(0,255)"))
    assert out.min() >= 0.0 and out.max() <= 255.0
    st2 = fresh_state(4)
    st2.u = np.full((4, 4), -9.0)
    assert np.all(step_v(st2, SolverConfig(rho=1.0, constraint_set="unconstrained")) == -9.0)


def test_step_v_uses_scaled_dual():
    st = fresh_state(3)
    st.u = np.full((3, 3), 1.0)
    st.u_hat = np.full((3, 3), 2.0)
    out = step_v(st, SolverConfig(rho=1.0, beta=4.0))
    assert np.all(out == 1.5)  # u + u_hat/beta


def test_step_H_known_pixel():
    # rho = beta = 1, q = 0.5: the prox of diag(4, 0.25) shrinks the leading
    # singular value 4 -> 3.5 and kills 0.25 inside the dead zone
    st = fresh_state(4)
    Lu = np.zeros((4, 4, 2, 2))
    Lu[1, 2] = np.diag([4.0, 0.25])
    cfg = SolverConfig(rho=1.0, beta=1.0, q=0.5)
    H = step_H(st, cfg, Lu=Lu)
    np.testing.assert_allclose(H[1, 2], np.diag([3.5, 0.0]), atol=1e-12)
    assert np.all(H[0, 0] == 0.0)


def test_step_H_large_beta_is_identity_limit():
    # rho/beta -> 0 makes the prox vanish: H approaches its argument
    rng = np.random.default_rng(0)
    st = fresh_state(4)
    Lu = rng.normal(size=(4, 4, 2, 2))
    cfg = SolverConfig(rho=1.0, beta=1e8, q=0.5)
    H = step_H(st, cfg, Lu=Lu)
    assert np.max(np.abs(H - Lu)) <= 1e-6


def test_step_duals_fixed_point():
    # zero residuals leave the multipliers unchanged
    n = 5
    rng = np.random.default_rng(1)
    st = fresh_state(n)
    st.u = rng.normal(size=(n, n))
    st.v = st.u.copy()
    Lu = hessian_apply(st.u)
    st.H = Lu.copy()
    st.u_hat = rng.normal(size=(n, n))
    st.H_hat = rng.normal(size=(n, n, 2, 2))
    uh, Hh = step_duals(st, SolverConfig(rho=1.0, beta=2.0))
    assert np.array_equal(uh, st.u_hat)
    assert np.array_equal(Hh, st.H_hat)


def test_step_duals_ascent_direction():
    st = fresh_state(3)
    st.u = np.full((3, 3), 2.0)
    st.v = np.zeros((3, 3))
    uh, _ = step_duals(st, SolverConfig(rho=1.0, beta=3.0), Lu=hessian_apply(st.u))
    assert np.all(uh == 6.0)  # 0 + beta*(u - v)


def test_step_u_solves_normal_equations():
    # residual of the assembled spatial operator vs the right-hand side
    n = 16
    rng = np.random.default_rng(2)
    mask = rng.random((n, n)) < 0.4
    mask[0, 0] = True
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    cfg = SolverConfig(rho=0.5, beta=2.0)
    st = fresh_state(n)
    st.v = rng.normal(size=(n, n))
    st.u_hat = rng.normal(size=(n, n))
    st.H = rng.normal(size=(n, n, 2, 2))
    st.H_hat = rng.normal(size=(n, n, 2, 2))
    symbol = hessian_symbol(n, n)
    u = step_u(st, cfg, m, mask, symbol)

    from qshs.diffops import hessian_adjoint
    from qshs.forward import forward_adjoint
    beta = 2.0
    lhs = (forward_adjoint(forward_apply(u, mask), mask)
           + beta * (hessian_adjoint(hessian_apply(u)) + u))
    rhs = (forward_adjoint(m, mask) + beta * st.v - st.u_hat
           + hessian_adjoint(beta * st.H - st.H_hat))
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------

def test_solve_zero_measurement_gives_zero():
    n = 16
    mask = make_mask(n, MaskSpec(density=0.5, seed=0))
    m = np.zeros((n, n), dtype=complex)
    r = solve(m, mask, SolverConfig(rho=0.5, max_iters=50))
    assert np.max(np.abs(r.u_final)) <= 1e-12
    assert r.converged


def test_solve_full_mask_noiseless_recovery():
    n = 32
    rng = np.random.default_rng(3)
    truth = np.abs(rng.normal(size=(n, n))) * 20.0 + 10.0
    from scipy.ndimage import gaussian_filter
    truth = gaussian_filter(truth, 2.0)
    mask = np.ones((n, n), dtype=bool)
    m = forward_apply(truth, mask)
    r = solve(m, mask, SolverConfig(rho=1e-3, max_iters=400, primal_tol=1e-7))
    assert np.max(np.abs(r.u_final - truth)) <= 1e-3 * np.max(truth)


def test_solve_result_shapes_and_traces():
    n = 16
    mask = make_mask(n, MaskSpec(density=0.4, seed=1))
    truth = np.full((n, n), 50.0)
    m = simulate_measurement(truth, mask, NoiseSpec(sigma=0.5, seed=2))
    r = solve(m, mask, SolverConfig(rho=0.2, max_iters=60))
    assert isinstance(r, ReconResult)
    k = r.iterations_run
    assert 1 <= k <= 60
    for tr in (r.objective_trace, r.primal_residual_u_trace,
               r.primal_residual_H_trace, r.u_norm_trace):
        assert tr.shape == (k,)
    assert np.all(np.isfinite(r.objective_trace))


def test_solve_objective_decreases_overall():
    n = 32
    from qshs.phantoms import shepp_logan_smooth
    truth = shepp_logan_smooth(n)
    mask = make_mask(n, MaskSpec(density=0.35, seed=4))
    m = simulate_measurement(truth, mask, NoiseSpec(sigma=1.0, seed=5))
    r = solve(m, mask, SolverConfig(rho=0.5, max_iters=200))
    assert r.objective_trace[-1] < r.objective_trace[0]
    # tail is near-flat: late relative drift under 1%
    tail = r.objective_trace[-20:]
    assert (tail.max() - tail.min()) / abs(tail.mean()) < 0.01


def test_hs1_equals_qshs_q1_bit_for_bit():
    n = 32
    from qshs.phantoms import blobs
    truth = blobs(n)
    mask = make_mask(n, MaskSpec(density=0.4, seed=6))
    m = simulate_measurement(truth, mask, NoiseSpec(sigma=1.5, seed=7))
    r1 = solve(m, mask, SolverConfig(rho=0.8, q=1.0, method="qshs", max_iters=80))
    r2 = solve(m, mask, SolverConfig(rho=0.8, q=0.3, method="hs1", max_iters=80))
    assert np.array_equal(r1.u_final, r2.u_final)
    assert np.array_equal(r1.objective_trace, r2.objective_trace)
    assert r1.iterations_run == r2.iterations_run


def test_all_methods_run_and_improve_on_adjoint():
    n = 32
    from qshs.forward import forward_adjoint
    from qshs.metrics import mse
    from qshs.phantoms import shepp_logan_smooth
    truth = shepp_logan_smooth(n)
    mask = make_mask(n, MaskSpec(density=0.35, seed=8))
    m = simulate_measurement(truth, mask, NoiseSpec(sigma=1.0, seed=9))
    zero_fill = forward_adjoint(m, mask)
    for method in METHODS:
        r = solve(m, mask, SolverConfig(rho=0.5, method=method, max_iters=300))
        assert mse(r.u_final, truth) < mse(zero_fill, truth), method


def test_solve_requires_dc_bin():
    mask = np.ones((8, 8), dtype=bool)
    mask[0, 0] = False
    with pytest.raises(ValueError):
        solve(np.zeros((8, 8), dtype=complex), mask, SolverConfig(rho=1.0))


def test_solve_shape_mismatch():
    with pytest.raises(ValueError):
        solve(np.zeros((8, 8), dtype=complex), np.ones((4, 4), dtype=bool),
              SolverConfig(rho=1.0))


def test_divergence_error_carries_location():
    err = SolverDivergenceError("step_u", 17)
    assert err.step == "step_u" and err.iteration == 17
    assert "step_u" in str(err) and "17" in str(err)


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

def test_objective_zero_image():
    n = 8
    mask = np.ones((n, n), dtype=bool)
    m = dft2_forward(np.full((n, n), 3.0))
    cfg = SolverConfig(rho=1.0)
    # u = 0: data term is ||m||^2/2, penalty vanishes
    assert objective(np.zeros((n, n)), m, mask, cfg) == pytest.approx(
        0.5 * np.sum(np.abs(m) ** 2), rel=1e-12)


def test_objective_truth_noiseless_is_penalty_only():
    n = 12
    rng = np.random.default_rng(10)
    u = np.abs(rng.normal(size=(n, n)))
    mask = np.ones((n, n), dtype=bool)
    m = forward_apply(u, mask)
    cfg = SolverConfig(rho=2.0, q=0.5, beta=1.0)
    from qshs.solver import method_penalty_value
    want = 2.0 * method_penalty_value(hessian_apply(u), cfg)
    assert objective(u, m, mask, cfg) == pytest.approx(want, rel=1e-10)


def test_objective_ignores_unsampled_bins():
    n = 8
    rng = np.random.default_rng(11)
    u = rng.normal(size=(n, n))
    mask = np.zeros((n, n), dtype=bool)
    mask[0, 0] = True
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    cfg = SolverConfig(rho=1e-9)
    base = objective(u, m, mask, cfg)
    m2 = m + 100.0 * (~mask)  # corrupt only unsampled bins
    assert objective(u, m2, mask, cfg) == base
