"""Homogenization: normalize a pair of rectified views before comparison.

Each method suppresses some nuisance difference between a fresh capture and
the stored reference (lighting, sensor gain, compression) while keeping the
structural changes a tamper introduces. Methods are identified by stable
string ids that end up in the scores CSV.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidPairError, MissingReferenceError
from .raster import Raster, convolve2d, gaussian_blur, read_png, to_grayscale

BUILTIN_METHODS = ("none", "canny", "laplacian", "meanch")

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T
LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

CANNY_BLUR_SIGMA = 1.4
CANNY_LOW_SCALE = 0.66
CANNY_HIGH_SCALE = 1.33


def canny_adaptive(img: Raster) -> Raster:
    """Binary edge map with thresholds derived from the image's median intensity.

    Blur (sigma 1.4), Sobel gradients, non-maximum suppression along the
    quantized gradient direction, then hysteresis with
    low = 0.66 * median, high = 1.33 * median (clamped to [0, 1]) applied to
    the gradient magnitude. Output values are exactly 0 or 1.
    """
    gray = to_grayscale(img)
    med = float(np.median(gray.data))
    low = min(max(CANNY_LOW_SCALE * med, 0.0), 1.0)
    high = min(max(CANNY_HIGH_SCALE * med, 0.0), 1.0)

    smooth = gaussian_blur(gray, CANNY_BLUR_SIGMA).data
    gx = convolve2d(smooth, SOBEL_X)
    gy = convolve2d(smooth, SOBEL_Y)
    mag = np.hypot(gx, gy)

    # quantize gradient direction to 4 sectors and compare both neighbors
    ang = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    sector = np.zeros(ang.shape, dtype=np.int8)
    sector[(ang >= 22.5) & (ang < 67.5)] = 1
    sector[(ang >= 67.5) & (ang < 112.5)] = 2
    sector[(ang >= 112.5) & (ang < 157.5)] = 3

    padded = np.pad(mag, 1, mode="constant")
    n = {
        (0, 1): padded[1:-1, 2:], (0, -1): padded[1:-1, :-2],
        (1, 0): padded[2:, 1:-1], (-1, 0): padded[:-2, 1:-1],
        (1, 1): padded[2:, 2:], (-1, -1): padded[:-2, :-2],
        (1, -1): padded[2:, :-2], (-1, 1): padded[:-2, 2:],
    }
    neighbor_pairs = {0: ((0, 1), (0, -1)), 1: ((-1, 1), (1, -1)),
                      2: ((1, 0), (-1, 0)), 3: ((-1, -1), (1, 1))}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (d1, d2) in neighbor_pairs.items():
        m = sector == s
        keep |= m & (mag >= n[d1]) & (mag >= n[d2])

    strong = keep & (mag > high)
    weak = keep & (mag > low)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return Raster(np.zeros(mag.shape))
    strong_labels = np.unique(labels[strong])
    strong_labels = strong_labels[strong_labels > 0]
    edges = np.isin(labels, strong_labels)
    return Raster(edges.astype(np.float64))


def laplacian_response(img: Raster) -> Raster:
    """4-neighbor Laplacian remapped to [0, 1]: v -> v/8 + 0.5.

    Flat regions land exactly on 0.5; an isolated bright pixel on black hits
    0.0 at its center.
    """
    gray = to_grayscale(img)
    resp = convolve2d(gray.data, LAPLACIAN_KERNEL) / 8.0 + 0.5
    return Raster(np.clip(resp, 0.0, 1.0))


def mean_channel_align(img: Raster, reference: Raster) -> Raster:
    """Shift each channel of img so its mean matches the reference, clamped."""
    if img.channels != 3 or reference.channels != 3:
        raise InvalidInputError("mean-channel alignment expects 3-channel views")
    shift = reference.data.mean(axis=(0, 1)) - img.data.mean(axis=(0, 1))
    return Raster(np.clip(img.data + shift, 0.0, 1.0))


def homogenize_pair(input_view: Raster, reference_view: Raster,
                    method: str = "none") -> tuple[Raster, Raster]:
    """Apply one built-in homogenization method to a pair of same-size views.

    "none" passes both through; "canny" and "laplacian" map each view
    independently to a single-channel representation; "meanch" shifts the
    input's channel means onto the reference (the reference is never
    modified).
    """
    if input_view.data.shape != reference_view.data.shape:
        raise InvalidPairError(
            f"view shapes differ: {input_view.data.shape} vs {reference_view.data.shape}"
        )
    if method == "none":
        return input_view, reference_view
    if method == "canny":
        return canny_adaptive(input_view), canny_adaptive(reference_view)
    if method == "laplacian":
        return laplacian_response(input_view), laplacian_response(reference_view)
    if method == "meanch":
        return mean_channel_align(input_view, reference_view), reference_view
    raise InvalidInputError(f"unknown homogenization method {method!r}")


class PrecomputedPairs:
    """Externally homogenized pairs (e.g. learned edge or change maps).

    Heavier models run out-of-process and drop their outputs as
    `<pair_id>_a.png` / `<pair_id>_b.png` into one directory; this adapter
    makes them scoreable exactly like the built-in methods. The method id is
    the directory name unless overridden.
    """

    def __init__(self, root, name: str | None = None):
        self.root = Path(root)
        if not self.root.is_dir():
            raise InvalidInputError(f"precomputed pair directory not found: {self.root}")
        self.name = name or self.root.name
        if self.name in BUILTIN_METHODS:
            raise InvalidInputError(
                f"precomputed method name {self.name!r} collides with a built-in"
            )

    def load(self, pair_id: str) -> tuple[Raster, Raster]:
        path_a = self.root / f"{pair_id}_a.png"
        path_b = self.root / f"{pair_id}_b.png"
        missing = [str(p) for p in (path_a, path_b) if not p.is_file()]
        if missing:
            raise MissingReferenceError(
                f"precomputed rasters missing for pair {pair_id!r}: " + ", ".join(missing)
            )
        a, b = read_png(path_a), read_png(path_b)
        if a.data.shape != b.data.shape:
            raise InvalidPairError(f"precomputed pair {pair_id!r} has mismatched shapes")
        return a, b
