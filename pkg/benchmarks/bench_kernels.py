"""Timing comparison of the jitted per-pixel kernels vs the pure-numpy
vectorized fallback.

Run:  python3 benchmarks/bench_kernels.py [side] [repeats]

The prox kernel dominates solver runtime (one call per ADMM iteration), so
the numbers here translate directly to end-to-end solve time. The numpy
path stays available for environments without numba (QSHS_PURE_NUMPY=1).
"""

import sys
import time

import numpy as np

from qshs import kernels

side = int(sys.argv[1]) if len(sys.argv) > 1 else 256
repeats = int(sys.argv[2]) if len(sys.argv) > 2 else 20

rng = np.random.default_rng(0)
flat = rng.uniform(-5.0, 5.0, size=(side * side, 2, 2))
q, rho_eff = 0.5, 1.0

print(f"field {side}x{side} ({flat.shape[0]} matrices), q={q}, rho_eff={rho_eff}")
print(f"numba available and enabled: {kernels.NUMBA_ENABLED}")


def timeit(fn, *args):
    fn(*args)  # warm-up / compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


rows = [
    ("prox", kernels.prox_numba, kernels.prox_numpy, (flat, q, rho_eff)),
    ("penalty", kernels.penalty_numba, kernels.penalty_numpy, (flat, q, rho_eff)),
    ("singvals", kernels.singvals_numba, kernels.singvals_numpy, (flat,)),
]

print(f"{'kernel':<10} {'numba':>12} {'numpy':>12} {'speedup':>9}")
for name, jitted, plain, args in rows:
    t_np = timeit(plain, *args)
    if kernels.NUMBA_ENABLED:
        t_nb = timeit(jitted, *args)
        print(f"{name:<10} {t_nb * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms "
              f"{t_np / t_nb:>8.1f}x")
    else:
        print(f"{name:<10} {'-':>12} {t_np * 1e3:>10.3f}ms {'-':>9}")

# agreement sanity check alongside the timings
a = kernels.prox_numba(flat, q, rho_eff)
b = kernels.prox_numpy(flat, q, rho_eff)
print(f"max |numba - numpy| on prox: {np.max(np.abs(a - b)):.3e}")
