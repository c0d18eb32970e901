"""Measurement model for undersampled Fourier imaging: the masked unitary
2-D DFT, its adjoint, noisy measurement synthesis, and sampling-mask
generators (variable-density random, uniform random, radial spokes).

The transform is unitary (norm="ortho"), so the composition
adjoint-after-forward acts as a pure spectral mask and the frequency-domain
quadratic solve needs no extra scaling. The adjoint projects back to real
images, since the model treats images as real-valued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import as_image, as_kspace, as_mask


@dataclass(frozen=True)
class NoiseSpec:
    """Complex Gaussian k-space noise: per-component std sigma, fixed seed."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


_MASK_KINDS = ("variable-density-random", "uniform-random", "radial-lines")


@dataclass(frozen=True)
class MaskSpec:
    """Sampling pattern request: target density, generator kind, size of the
    always-sampled low-frequency center block, and seed."""

    density: float
    kind: str = "variable-density-random"
    center_fraction: float = 0.06
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.density <= 1.0):
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.kind not in _MASK_KINDS:
            raise ValueError(f"unknown mask kind {self.kind!r}; expected one of {_MASK_KINDS}")
        if not (0.0 <= self.center_fraction < 1.0):
            raise ValueError(f"center_fraction must lie in [0, 1), got {self.center_fraction}")


def dft2_forward(u) -> np.ndarray:
    """Unitary 2-D DFT of a real image; Parseval holds exactly."""
    return np.fft.fft2(as_image(u), norm="ortho")


def dft2_inverse(y) -> np.ndarray:
    """Unitary inverse 2-D DFT (complex output)."""
    return np.fft.ifft2(as_kspace(y), norm="ortho")


def forward_apply(u, mask) -> np.ndarray:
    """T u = mask * DFT(u); unmasked bins are exactly zero."""
    u = as_image(u)
    mask = as_mask(mask)
    if mask.shape != u.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image shape {u.shape}")
    return np.where(mask, dft2_forward(u), 0.0 + 0.0j)


def forward_adjoint(y, mask) -> np.ndarray:
    """T* y = Re(IDFT(mask * y)); real projection since images are real."""
    y = as_kspace(y)
    mask = as_mask(mask)
    if mask.shape != y.shape:
        raise ValueError(f"mask shape {mask.shape} does not match k-space shape {y.shape}")
    return np.real(np.fft.ifft2(np.where(mask, y, 0.0 + 0.0j), norm="ortho"))


def simulate_measurement(u, mask, noise: NoiseSpec) -> np.ndarray:
    """m = T u + eta, with i.i.d. complex Gaussian eta (per-component std
    sigma) on sampled bins only. Deterministic given noise.seed."""
    clean = forward_apply(u, mask)
    if noise.sigma == 0.0:
        return clean
    mask = as_mask(mask)
    rng = np.random.default_rng(noise.seed)
    eta = rng.normal(0.0, noise.sigma, size=clean.shape) \
        + 1j * rng.normal(0.0, noise.sigma, size=clean.shape)
    return clean + np.where(mask, eta, 0.0 + 0.0j)


# ---------------------------------------------------------------------------
# mask generation
# ---------------------------------------------------------------------------

def _center_block(width: int, center_fraction: float) -> np.ndarray:
    # square of side round(f*width) around DC in fftshift coordinates
    mask = np.zeros((width, width), dtype=bool)
    side = int(round(center_fraction * width))
    if side > 0:
        lo = width // 2 - side // 2
        block = np.zeros((width, width), dtype=bool)
        block[lo:lo + side, lo:lo + side] = True
        mask = np.fft.ifftshift(block)
    mask[0, 0] = True  # DC always observed
    return mask


def _weighted_fill(mask: np.ndarray, want: int, weights: np.ndarray, rng) -> None:
    # exact-count sampling without replacement among currently-unset bins
    free = ~mask.ravel()
    idx = np.flatnonzero(free)
    if want <= 0 or idx.size == 0:
        return
    w = weights.ravel()[idx]
    total = w.sum()
    if total <= 0:
        w = np.ones_like(w)
        total = w.sum()
    pick = rng.choice(idx, size=min(want, idx.size), replace=False, p=w / total)
    mask.ravel()[pick] = True


def _radial_mask(width: int, spec: MaskSpec, base: np.ndarray, rng) -> np.ndarray:
    # accumulate golden-angle spokes through DC until the budget is met,
    # then trim overshoot (random excess bins) or top up uniformly
    target = int(round(spec.density * width * width))
    mask = base.copy()
    center = (width - 1) / 2.0
    golden = math.pi * (3.0 - math.sqrt(5.0))
    angle = rng.uniform(0.0, math.pi)
    tt = np.linspace(-1.0, 1.0, 4 * width)
    spokes = 0
    while mask.sum() < target and spokes < 8 * width:
        ca, sa = math.cos(angle), math.sin(angle)
        r1 = np.clip(np.round(center + tt * center * ca).astype(int), 0, width - 1)
        r2 = np.clip(np.round(center + tt * center * sa).astype(int), 0, width - 1)
        shifted = np.zeros((width, width), dtype=bool)
        shifted[r1, r2] = True
        mask |= np.fft.ifftshift(shifted)
        angle += golden
        spokes += 1
    extra = int(mask.sum()) - target
    if extra > 0:
        removable = np.flatnonzero((mask & ~base).ravel())
        drop = rng.choice(removable, size=min(extra, removable.size), replace=False)
        mask.ravel()[drop] = False
    elif extra < 0:
        _weighted_fill(mask, -extra, np.ones((width, width)), rng)
    return mask


def make_mask(width: int, spec: MaskSpec) -> np.ndarray:
    """Generate a boolean sampling mask with the requested density (exact to
    one bin), a fully-sampled center block, and the DC bin always set."""
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    target = int(round(spec.density * width * width))
    base = _center_block(width, spec.center_fraction)
    have = int(base.sum())
    if have > target:
        raise ValueError(
            f"density {spec.density} too low: center block alone holds {have} of "
            f"{target} allowed bins")
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "radial-lines":
        mask = _radial_mask(width, spec, base, rng)
    else:
        if spec.kind == "variable-density-random":
            # Gaussian low-frequency weighting, std = width/6 in shifted coords
            ax = np.arange(width) - (width - 1) / 2.0
            r2 = ax[:, None] ** 2 + ax[None, :] ** 2
            weights = np.fft.ifftshift(np.exp(-r2 / (2.0 * (width / 6.0) ** 2)))
        else:
            weights = np.ones((width, width))
        mask = base.copy()
        _weighted_fill(mask, target - have, weights, rng)
    return as_mask(mask)
