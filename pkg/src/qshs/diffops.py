"""Discrete second-derivative operators, the per-pixel Hessian map and its
adjoint, first-difference gradient operators for the TV baseline, and their
Fourier symbols.

All operators use periodic boundary handling, which makes every stencil
circulant and the whole normal-operator family diagonal in the 2D DFT basis.
That diagonalization is what the frequency-domain quadratic solve relies on.

Stencils (unit pixel spacing):

    D_xx u(r1,r2) = u(r1+1,r2) - 2 u(r1,r2) + u(r1-1,r2)
    D_yy          = same along the second axis
    D_xy = D_yx   = [u(+1,+1) - u(+1,-1) - u(-1,+1) + u(-1,-1)] / 4

The mixed channel uses the centered cross difference rather than a
forward-difference composition: the centered form commutes with quarter-turn
rotations of the grid (per-pixel singular values are preserved exactly under
rot90), while the forward form breaks that symmetry at the 1e-2 level. Both
mixed channels are stored even though they are equal, keeping the 2x2 layout
of the per-pixel matrix explicit.
"""

from __future__ import annotations

import numpy as np

from .grids import as_hessian_field, as_image, zeros_field


def _dxx(u: np.ndarray) -> np.ndarray:
    return np.roll(u, -1, axis=0) - 2.0 * u + np.roll(u, 1, axis=0)


def _dyy(u: np.ndarray) -> np.ndarray:
    return np.roll(u, -1, axis=1) - 2.0 * u + np.roll(u, 1, axis=1)


def _dxy(u: np.ndarray) -> np.ndarray:
    return 0.25 * (np.roll(u, (-1, -1), axis=(0, 1)) - np.roll(u, (-1, 1), axis=(0, 1))
                   - np.roll(u, (1, -1), axis=(0, 1)) + np.roll(u, (1, 1), axis=(0, 1)))


def hessian_apply(u) -> np.ndarray:
    """Per-pixel 2x2 second-derivative matrices of an image, periodic wrap.

    Output shape (n, n, 2, 2); channels [0,0]=D_xx, [0,1]=D_xy, [1,0]=D_yx,
    [1,1]=D_yy. Constant images map to the zero field.
    """
    u = as_image(u)
    P = zeros_field(u.shape[0])
    P[:, :, 0, 0] = _dxx(u)
    mixed = _dxy(u)
    P[:, :, 0, 1] = mixed
    P[:, :, 1, 0] = mixed
    P[:, :, 1, 1] = _dyy(u)
    return P


def hessian_adjoint(P) -> np.ndarray:
    """Adjoint of hessian_apply: sum of transposed stencils over channels.

    Every stencil here is symmetric under index negation, hence self-adjoint;
    the adjoint is the same stencil applied channel-wise and summed.
    """
    P = as_hessian_field(P)
    return (_dxx(P[:, :, 0, 0]) + _dxy(P[:, :, 0, 1])
            + _dxy(P[:, :, 1, 0]) + _dyy(P[:, :, 1, 1]))


def _symbol_from_stencils(width: int, height: int, ops) -> np.ndarray:
    # |DFT of impulse response|^2 summed over operators = spectrum of sum of
    # K^T K, valid because each K is circulant
    if width <= 0 or height <= 0:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
    sym = np.zeros((width, height))
    impulse = np.zeros((width, height))
    impulse[0, 0] = 1.0
    for op in ops:
        sym += np.abs(np.fft.fft2(op(impulse))) ** 2
    return sym


def hessian_symbol(width: int, height: int) -> np.ndarray:
    """Eigenvalues of H^T H on the frequency grid, as a (width, height) real
    array indexed like np.fft.fft2 output. Non-negative; zero only at DC."""
    return _symbol_from_stencils(width, height, (_dxx, _dxy, _dxy, _dyy))


# ---------------------------------------------------------------------------
# first differences (TV baseline)
# ---------------------------------------------------------------------------

def grad_apply(u) -> np.ndarray:
    """Forward first differences, periodic: output (n, n, 2) with channels
    (u(r1+1,r2) - u, u(r1,r2+1) - u)."""
    u = as_image(u)
    G = np.empty(u.shape + (2,))
    G[:, :, 0] = np.roll(u, -1, axis=0) - u
    G[:, :, 1] = np.roll(u, -1, axis=1) - u
    return G


def grad_adjoint(G) -> np.ndarray:
    """Adjoint of grad_apply (negative divergence with backward differences)."""
    G = np.asarray(G, dtype=np.float64)
    gx, gy = G[:, :, 0], G[:, :, 1]
    return (np.roll(gx, 1, axis=0) - gx) + (np.roll(gy, 1, axis=1) - gy)


def grad_symbol(width: int, height: int) -> np.ndarray:
    """Eigenvalues of G^T G on the frequency grid; zero only at DC."""
    def fx(u):
        return np.roll(u, -1, axis=0) - u

    def fy(u):
        return np.roll(u, -1, axis=1) - u

    return _symbol_from_stencils(width, height, (fx, fy))
