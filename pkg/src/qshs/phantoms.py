"""Built-in synthetic test images on the 0-255 intensity scale.

Three phantoms cover the regimes the methods differ on: a piecewise-constant
head phantom (favors first-order TV), a smoothed copy of it (second-order
territory), and a smooth bump field with one sharp disk. All are
deterministic functions of the grid size.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

# (intensity, semi-axis a, semi-axis b, x0, y0, angle degrees) - the
# high-contrast variant of the classic head-phantom ellipse table
_SL_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def shepp_logan(n: int = 64) -> np.ndarray:
    """Piecewise-constant head phantom, n x n, values in [0, 255]."""
    if n < 2:
        raise ValueError(f"phantom size must be >= 2, got {n}")
    half = (n - 1) / 2.0
    ax = (np.arange(n) - half) / (n / 2.0)
    y = -ax[:, None]  # rows top-to-bottom, head up
    x = ax[None, :]
    u = np.zeros((n, n))
    for val, a, b, x0, y0, deg in _SL_ELLIPSES:
        phi = np.deg2rad(deg)
        xr = (x - x0) * np.cos(phi) + (y - y0) * np.sin(phi)
        yr = -(x - x0) * np.sin(phi) + (y - y0) * np.cos(phi)
        u += val * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    return 255.0 * np.clip(u, 0.0, 1.0)


def shepp_logan_smooth(n: int = 64) -> np.ndarray:
    """Head phantom after a 1-pixel Gaussian blur (edges softened)."""
    return gaussian_filter(shepp_logan(n), sigma=1.0)


def blobs(n: int = 64) -> np.ndarray:
    """Smooth bump field: Gaussian humps on a gentle ramp plus one sharp
    disk, values in [0, 255]."""
    if n < 2:
        raise ValueError(f"phantom size must be >= 2, got {n}")
    half = (n - 1) / 2.0
    ax = (np.arange(n) - half) / (n / 2.0)
    yy = ax[:, None]
    xx = ax[None, :]
    u = 0.25 + 0.15 * xx + 0.10 * yy  # ramp keeps the background off zero
    bumps = ((0.55, -0.35, -0.30, 0.30), (0.45, 0.40, -0.25, 0.22),
             (0.35, 0.05, 0.40, 0.35), (0.30, -0.45, 0.45, 0.18),
             (0.20, 0.55, 0.50, 0.12))
    for amp, cx, cy, width in bumps:
        u = u + amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * width ** 2))
    u = u + 0.35 * ((xx - 0.55) ** 2 + (yy + 0.55) ** 2 <= 0.14 ** 2)
    u = u / u.max()
    return 255.0 * np.clip(u, 0.0, 1.0)


_REGISTRY = {
    "shepp-logan": shepp_logan,
    "shepp-logan-smooth": shepp_logan_smooth,
    "blobs": blobs,
}


def phantom_names():
    return tuple(sorted(_REGISTRY))


def get_phantom(token: str, default_n: int = 64) -> np.ndarray:
    """Build a phantom from a token 'name' or 'name:n'."""
    name, _, size = token.partition(":")
    if name not in _REGISTRY:
        raise ValueError(
            f"unknown phantom {name!r}; available: {', '.join(phantom_names())}")
    n = int(size) if size else default_n
    return _REGISTRY[name](n)
