"""Complex steerable pyramid built in the frequency domain.

Each band isolates one octave of radial frequency and one of several
orientation lobes. The orientation masks cover only a half-plane of the
spectrum, so band coefficients are complex and their phase tracks local
translation - the property the phase-aware similarity metric relies on.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidInputError

DEFAULT_LEVELS = 4
DEFAULT_ORIENTATIONS = 6


def _polar_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered (fftshift layout) radius/angle grids in radians per sample."""
    fy = 2.0 * np.pi * (np.arange(h) - h // 2) / h
    fx = 2.0 * np.pi * (np.arange(w) - w // 2) / w
    gy, gx = np.meshgrid(fy, fx, indexing="ij")
    return np.hypot(gx, gy), np.arctan2(gy, gx)


def _high_mask(r: np.ndarray, cutoff: float) -> np.ndarray:
    """Raised-cosine (in log2 radius) high-pass: 0 below cutoff/2, 1 above cutoff."""
    out = np.zeros_like(r)
    out[r >= cutoff] = 1.0
    band = (r > cutoff / 2.0) & (r < cutoff)
    out[band] = np.cos(0.5 * np.pi * np.log2(r[band] / cutoff))
    return out


def _orientation_masks(theta: np.ndarray, n_orient: int) -> list[np.ndarray]:
    """Single-lobe cos^(K-1) masks at K evenly spaced orientations."""
    masks = []
    for j in range(n_orient):
        d = np.mod(theta - j * np.pi / n_orient + np.pi, 2.0 * np.pi) - np.pi
        m = np.where(np.abs(d) < np.pi / 2.0, np.cos(d) ** (n_orient - 1), 0.0)
        masks.append(m)
    return masks


@lru_cache(maxsize=32)
def _level_masks(h: int, w: int, n_orient: int):
    """Per-size masks: (band masks for each orientation, low-pass mask)."""
    r, theta = _polar_grid(h, w)
    hi = _high_mask(r, np.pi / 2.0)
    lo = np.sqrt(np.maximum(0.0, 1.0 - hi * hi))
    bands = [hi * om for om in _orientation_masks(theta, n_orient)]
    return bands, lo


def band_decompose(img: np.ndarray, levels: int = DEFAULT_LEVELS,
                   orientations: int = DEFAULT_ORIENTATIONS) -> list[list[np.ndarray]]:
    """Decompose a 2-D image into complex oriented bands, one octave per level.

    Returns bands[level][orientation] with level 0 the finest. When the
    image dimensions allow it, the spectrum is cropped in half after each
    level, so coarser bands come back at dyadically smaller sizes; otherwise
    everything stays at full resolution (slower, same structure).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidInputError(f"band decomposition expects a 2-D array, got {img.shape}")
    h, w = img.shape
    if min(h, w) < 2 ** (levels + 1):
        raise InvalidInputError(f"image {h}x{w} too small for {levels} pyramid levels")

    subsample = h % (2 ** (levels - 1)) == 0 and w % (2 ** (levels - 1)) == 0
    spectrum = np.fft.fftshift(np.fft.fft2(img))
    out: list[list[np.ndarray]] = []
    if subsample:
        for _ in range(levels):
            hh, ww = spectrum.shape
            band_masks, lo = _level_masks(hh, ww, orientations)
            out.append([np.fft.ifft2(np.fft.ifftshift(spectrum * m)) for m in band_masks])
            spectrum = spectrum * lo
            spectrum = spectrum[hh // 4: hh - hh // 4, ww // 4: ww - ww // 4] / 4.0
    else:
        r, theta = _polar_grid(h, w)
        omasks = _orientation_masks(theta, orientations)
        residual_lo = np.ones_like(r)
        for k in range(levels):
            hi = _high_mask(r, np.pi / 2.0 ** (k + 1))
            radial = residual_lo * hi
            out.append([np.fft.ifft2(np.fft.ifftshift(spectrum * (radial * om))) for om in omasks])
            residual_lo = residual_lo * np.sqrt(np.maximum(0.0, 1.0 - hi * hi))
    return out
