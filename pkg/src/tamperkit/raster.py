"""Minimal raster image type and the pixel-level kernels built on it.

All images are float64 in [0, 1], single channel (H, W) or RGB (H, W, 3),
row-major. Every function is pure: inputs are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidInputError

# BT.601 luma weights, the classic "0.299 R + 0.587 G + 0.114 B".
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Raster:
    """Immutable float image in [0, 1]; shape (H, W) or (H, W, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3):
            raise InvalidInputError(f"raster must be 2-D or 3-D, got shape {arr.shape}")
        if arr.ndim == 3 and arr.shape[2] != 3:
            raise InvalidInputError(f"3-D raster must have 3 channels, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(f"raster must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("raster contains non-finite values")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 1.0:
            raise InvalidInputError(f"raster values outside [0, 1]: min={lo:g} max={hi:g}")
        arr = arr.copy(order="C")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    @classmethod
    def from_array(cls, arr: np.ndarray, clip: bool = False) -> "Raster":
        """Wrap an array; with clip=True, clamp into [0, 1] first."""
        arr = np.asarray(arr, dtype=np.float64)
        if clip:
            arr = np.clip(arr, 0.0, 1.0)
        return cls(arr)


def to_grayscale(img: Raster) -> Raster:
    """Collapse RGB to luma with weights (0.299, 0.587, 0.114); 1-channel input passes through."""
    if img.channels == 1:
        return img
    return Raster(img.data @ GRAY_WEIGHTS)


def convolve2d(img: Raster | np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution with replicate (edge-clamp) border handling.

    out[y, x] = sum_{i,j} kernel[i, j] * img[y - i + ci, x - j + cj]
    with (ci, cj) the kernel center. The kernel must be odd in both axes.
    Returns a raw float array: responses are *not* clamped to [0, 1], so
    derivative kernels keep their sign.
    """
    arr = img.data if isinstance(img, Raster) else np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"convolve2d expects a single-channel image, got shape {arr.shape}")
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise InvalidInputError(f"kernel must be 2-D with odd dimensions, got shape {kernel.shape}")
    return ndimage.convolve(arr, kernel, mode="nearest")


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3 * sigma)."""
    if not (sigma > 0):
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: Raster, sigma: float) -> Raster:
    """Separable Gaussian blur with replicate borders; mass-preserving on constants."""
    k = gaussian_kernel1d(sigma)
    arr = img.data
    if arr.ndim == 2:
        out = ndimage.convolve1d(arr, k, axis=0, mode="nearest")
        out = ndimage.convolve1d(out, k, axis=1, mode="nearest")
    else:
        out = np.empty_like(arr)
        for c in range(arr.shape[2]):
            tmp = ndimage.convolve1d(arr[:, :, c], k, axis=0, mode="nearest")
            out[:, :, c] = ndimage.convolve1d(tmp, k, axis=1, mode="nearest")
    # normalized kernel keeps values inside [0, 1] up to rounding noise
    return Raster(np.clip(out, 0.0, 1.0))


def _bilinear_gather(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample arr at float coords (xs, ys), clamping to the border."""
    h, w = arr.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    flat = np.ascontiguousarray(arr).reshape(h * w, -1)
    base0, base1 = y0 * w, y1 * w
    top = np.take(flat, base0 + x0, axis=0) * (1.0 - fx) + np.take(flat, base0 + x1, axis=0) * fx
    bot = np.take(flat, base1 + x0, axis=0) * (1.0 - fx) + np.take(flat, base1 + x1, axis=0) * fx
    out = top * (1.0 - fy) + bot * fy
    return out if arr.ndim == 3 else out[..., 0]


def sample_bilinear(img: Raster | np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup at arbitrary float coordinates, border-clamped."""
    arr = img.data if isinstance(img, Raster) else np.asarray(img, dtype=np.float64)
    return _bilinear_gather(arr, np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64))


def resize_bilinear(img: Raster, out_width: int, out_height: int) -> Raster:
    """Bilinear resize with pixel-center alignment.

    Output pixel center (xo, yo) samples the source at
    ((xo + 0.5) * W / W' - 0.5, (yo + 0.5) * H / H' - 0.5), clamped to the
    border. Resizing to the identical size reproduces the input exactly.
    """
    if out_width < 1 or out_height < 1:
        raise InvalidInputError(f"target size must be positive, got {out_width}x{out_height}")
    sx = img.width / out_width
    sy = img.height / out_height
    xs = (np.arange(out_width, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(out_height, dtype=np.float64) + 0.5) * sy - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return Raster(np.clip(_bilinear_gather(img.data, gx, gy), 0.0, 1.0))


def read_png(path) -> Raster:
    """Load an 8-bit grayscale or RGB PNG, scaling intensities by 1/255."""
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.float64)
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.float64)
        elif im.mode in ("P", "RGBA", "LA", "1"):
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
        else:
            raise InvalidInputError(f"unsupported PNG mode {im.mode!r} (8-bit gray/RGB only)")
    return Raster(arr / 255.0)


def write_png(img: Raster, path) -> None:
    """Write as 8-bit PNG; v -> round(v * 255) clamped."""
    arr = np.clip(np.rint(img.data * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L" if arr.ndim == 2 else "RGB").save(path, format="PNG")
