"""Core grid types: images, per-pixel 2x2 matrix fields, k-space rasters, masks.

Everything is a plain numpy array in double precision, row-major, with the
pixel at coordinate (r1, r2) stored at flat index r1*width + r2. Images are
square. A Hessian field has shape (n, n, 2, 2) with channels
[0,0]=xx, [0,1]=xy, [1,0]=yx, [1,1]=yy. Validation helpers raise ValueError
instead of wrapping arrays in classes.
"""

from __future__ import annotations

import numpy as np


def as_image(data) -> np.ndarray:
    """Validate and return a square float64 image array."""
    u = np.ascontiguousarray(data, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {u.shape}")
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"image must be square, got shape {u.shape}")
    if not np.isfinite(u).all():
        raise ValueError("image contains non-finite entries")
    return u


def as_hessian_field(data) -> np.ndarray:
    """Validate and return an (n, n, 2, 2) float64 matrix field."""
    P = np.ascontiguousarray(data, dtype=np.float64)
    if P.ndim != 4 or P.shape[2:] != (2, 2) or P.shape[0] != P.shape[1]:
        raise ValueError(f"matrix field must have shape (n, n, 2, 2), got {P.shape}")
    if not np.isfinite(P).all():
        raise ValueError("matrix field contains non-finite entries")
    return P


def as_kspace(data) -> np.ndarray:
    """Validate and return a square complex128 k-space array."""
    m = np.ascontiguousarray(data, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"k-space must be square 2-D, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("k-space contains non-finite entries")
    return m


def as_mask(data) -> np.ndarray:
    """Validate and return a square boolean sampling mask with >= 1 sampled bin."""
    mask = np.ascontiguousarray(data)
    if mask.dtype != np.bool_:
        if not np.isin(np.unique(mask), (0, 1)).all():
            raise ValueError("mask entries must be boolean or 0/1")
        mask = mask.astype(bool)
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
        raise ValueError(f"mask must be square 2-D, got shape {mask.shape}")
    if not mask.any():
        raise ValueError("mask has no sampled bins")
    return mask


def zeros_image(n: int) -> np.ndarray:
    return np.zeros((n, n), dtype=np.float64)


def zeros_field(n: int, channels=(2, 2)) -> np.ndarray:
    return np.zeros((n, n) + tuple(channels), dtype=np.float64)


def image_linf_and_l2_norms(u) -> tuple[float, float]:
    """Max-abs entry and Euclidean norm of the flattened raster."""
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        return 0.0, 0.0
    return float(np.abs(u).max()), float(np.linalg.norm(u.ravel()))


def field_pixel(P, r) -> np.ndarray:
    """The 2x2 matrix at pixel coordinate r = (r1, r2). Copy, not a view."""
    r1, r2 = r
    n1, n2 = P.shape[0], P.shape[1]
    if not (0 <= r1 < n1 and 0 <= r2 < n2):
        raise IndexError(f"pixel {r!r} out of bounds for {n1}x{n2} field")
    return np.array(P[r1, r2], dtype=np.float64)


def set_field_pixel(P, r, M) -> None:
    """Write a 2x2 matrix at pixel coordinate r; inverse of field_pixel."""
    r1, r2 = r
    n1, n2 = P.shape[0], P.shape[1]
    if not (0 <= r1 < n1 and 0 <= r2 < n2):
        raise IndexError(f"pixel {r!r} out of bounds for {n1}x{n2} field")
    M = np.asarray(M, dtype=np.float64)
    if M.shape != P.shape[2:]:
        raise ValueError(f"expected matrix of shape {P.shape[2:]}, got {M.shape}")
    P[r1, r2] = M
