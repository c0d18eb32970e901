"""Image restoration from undersampled Fourier measurements with a
non-convex spectral shrinkage prior on the per-pixel Hessian, plus convex
baselines (nuclear-norm and Frobenius Hessian penalties, isotropic TV),
solved by a four-step ADMM with an exact frequency-domain quadratic solve.
"""

from .diffops import (grad_adjoint, grad_apply, grad_symbol, hessian_adjoint,
                      hessian_apply, hessian_symbol)
from .forward import (MaskSpec, NoiseSpec, dft2_forward, dft2_inverse,
                      forward_adjoint, forward_apply, make_mask,
                      simulate_measurement)
from .grids import (as_hessian_field, as_image, as_kspace, as_mask,
                    field_pixel, image_linf_and_l2_norms, set_field_pixel,
                    zeros_field, zeros_image)
from .kernels import NUMBA_ENABLED
from .metrics import SsimParams, TuneSpec, golden_section_tune, mse, ssim
from .phantoms import blobs, get_phantom, phantom_names, shepp_logan, shepp_logan_smooth
from .shrinkage import (ShrinkParams, Svd2, gq_derivative, gq_value,
                        gq_value_quad, hs1_matrix_prox, hs2_matrix_prox,
                        qshs_matrix_prox, qshs_penalty, scalar_shrink,
                        shrink_threshold, sq_inverse, svd2x2, tv1_vector_prox)
from .solver import (METHODS, ReconResult, SolverConfig, SolverDivergenceError,
                     SolverState, objective, solve, step_H, step_duals, step_u,
                     step_v)

__version__ = "0.1.0"

__all__ = [
    "MaskSpec", "NoiseSpec", "ShrinkParams", "Svd2", "SsimParams", "TuneSpec",
    "SolverConfig", "SolverState", "SolverDivergenceError", "ReconResult",
    "METHODS", "NUMBA_ENABLED",
    "as_image", "as_hessian_field", "as_kspace", "as_mask", "zeros_image",
    "zeros_field", "image_linf_and_l2_norms", "field_pixel", "set_field_pixel",
    "hessian_apply", "hessian_adjoint", "hessian_symbol",
    "grad_apply", "grad_adjoint", "grad_symbol",
    "dft2_forward", "dft2_inverse", "forward_apply", "forward_adjoint",
    "simulate_measurement", "make_mask",
    "scalar_shrink", "shrink_threshold", "sq_inverse", "gq_derivative",
    "gq_value", "gq_value_quad", "svd2x2", "qshs_matrix_prox",
    "hs1_matrix_prox", "hs2_matrix_prox", "tv1_vector_prox", "qshs_penalty",
    "solve", "objective", "step_v", "step_H", "step_u", "step_duals",
    "mse", "ssim", "golden_section_tune",
    "shepp_logan", "shepp_logan_smooth", "blobs", "get_phantom", "phantom_names",
    "__version__",
]
