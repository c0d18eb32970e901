"""Image quality metrics (MSE, SSIM) and golden-section search over the
regularization weight on a log10 scale."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .grids import as_image


@dataclass(frozen=True)
class SsimParams:
    """Windowed-SSIM constants. Defaults: k1=0.01, k2=0.03, 11x11 Gaussian
    window (radius 5, sigma 1.5), dynamic range 255."""

    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    window_radius: int = 5
    window_sigma: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be > 0")
        if self.dynamic_range <= 0:
            raise ValueError(f"dynamic_range must be > 0, got {self.dynamic_range}")
        if self.window_radius < 1:
            raise ValueError(f"window_radius must be >= 1, got {self.window_radius}")
        if self.window_sigma <= 0:
            raise ValueError(f"window_sigma must be > 0, got {self.window_sigma}")


def mse(a, b) -> float:
    """Mean squared difference."""
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def _gaussian_window(radius: int, sigma: float) -> np.ndarray:
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, p: SsimParams = SsimParams()) -> float:
    """Mean structural similarity over Gaussian-windowed local statistics.

    Local means, variances and covariance come from convolving with a
    normalized Gaussian window; the map is averaged over the fully-covered
    interior (valid-mode crop). Identical images give exactly 1.0: the
    numerator and denominator factors are then computed from bitwise-equal
    statistics.
    """
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    side = 2 * p.window_radius + 1
    if a.shape[0] < side:
        raise ValueError(f"image side {a.shape[0]} smaller than SSIM window {side}")
    w = _gaussian_window(p.window_radius, p.window_sigma)

    def filt(x):
        return fftconvolve(x, w, mode="valid")

    mu_a = filt(a)
    mu_b = filt(b)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = filt(a * a) - mu_aa
    var_b = filt(b * b) - mu_bb
    cov = filt(a * b) - mu_ab
    c1 = (p.k1 * p.dynamic_range) ** 2
    c2 = (p.k2 * p.dynamic_range) ** 2
    num = (2.0 * mu_ab + c1) * (2.0 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


# ---------------------------------------------------------------------------
# golden-section tuning
# ---------------------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TuneSpec:
    """Search window on log10(rho) and the tuning objective."""

    log10_lo: float = -3.0
    log10_hi: float = 2.0
    tol: float = 0.05
    objective: str = "mse"

    def __post_init__(self):
        if not (self.log10_lo < self.log10_hi):
            raise ValueError(
                f"need log10_lo < log10_hi, got [{self.log10_lo}, {self.log10_hi}]")
        if not (self.tol > 0):
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.objective not in ("mse", "neg-ssim"):
            raise ValueError(f"objective must be 'mse' or 'neg-ssim', got {self.objective!r}")


def golden_section_tune(eval_fn, spec: TuneSpec):
    """Minimize a unimodal scalar function over [log10_lo, log10_hi] by
    golden-section bracketing; returns (best_x, best_value) among all
    evaluated points once the bracket width drops below tol."""
    lo, hi = spec.log10_lo, spec.log10_hi

    def checked(x):
        val = float(eval_fn(x))
        if not math.isfinite(val):
            raise ValueError(f"tuning objective returned {val} at rho = 10^{x} = {10.0 ** x}")
        return val

    h = hi - lo
    if h <= spec.tol:
        mid = 0.5 * (lo + hi)
        return mid, checked(mid)
    best = (math.inf, math.nan)
    x1 = hi - _INVPHI * h
    x2 = lo + _INVPHI * h
    f1 = checked(x1)
    f2 = checked(x2)
    best = min(best, (f1, x1), (f2, x2))
    n = math.ceil(math.log(spec.tol / h) / math.log(_INVPHI))
    for _ in range(n):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            h = hi - lo
            x1 = hi - _INVPHI * h
            f1 = checked(x1)
            best = min(best, (f1, x1))
        else:
            lo, x1, f1 = x1, x2, f2
            h = hi - lo
            x2 = lo + _INVPHI * h
            f2 = checked(x2)
            best = min(best, (f2, x2))
        if h <= spec.tol:
            break
    return best[1], best[0]
