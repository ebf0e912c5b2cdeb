"""Similarity metrics between homogenized view pairs.

Every metric reports both its natural value and a dissimilarity in which
larger always means "more likely tampered": absolute error is already a
dissimilarity, the structural metrics are flipped as 1 - value.
Single-channel inputs are compared directly; for color inputs the
structural metrics work on luma while absolute error uses all channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidPairError
from .homogenize import PrecomputedPairs, homogenize_pair
from .pyramid import band_decompose
from .raster import Raster, to_grayscale

# Canonical metric order; stump training indexes features this way.
METRIC_IDS = ("mae", "ssim", "ms_ssim", "cw_ssim", "hog")

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

MS_SSIM_EXPONENTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
MS_SSIM_MIN_DIM = 176

CW_SSIM_K = 1e-8
CW_SSIM_WINDOW = 7
CW_SSIM_LEVELS = (1, 2, 3)  # zero-based: the three coarsest of four levels
CW_SSIM_MIN_DIM = 128

HOG_BINS = 9
HOG_CELL = 8
HOG_BLOCK = 2
HOG_CLIP = 0.2


def _as_gray2d(img: Raster) -> np.ndarray:
    return to_grayscale(img).data


def _check_pair(a: Raster, b: Raster, min_dim: int = 1, metric: str = "") -> None:
    if a.data.shape != b.data.shape:
        raise InvalidPairError(f"{metric}: shapes differ: {a.data.shape} vs {b.data.shape}")
    if min(a.height, a.width) < min_dim:
        raise InvalidInputError(
            f"{metric}: minimum dimension {min_dim} required, got {a.height}x{a.width}"
        )


def mae(a: Raster, b: Raster) -> float:
    """Mean absolute per-pixel difference over all channels."""
    _check_pair(a, b, 1, "mae")
    return float(np.mean(np.abs(a.data - b.data)))


def _ssim_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    return g / g.sum()


def _filter_valid(arr: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable valid-mode filtering with a symmetric 1-D kernel."""
    half = len(k) // 2
    tmp = ndimage.correlate1d(arr, k, axis=0, mode="constant")
    tmp = ndimage.correlate1d(tmp, k, axis=1, mode="constant")
    return tmp[half:-half, half:-half]


def _ssim_maps(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-window (ssim, contrast-structure) maps over all full windows."""
    c1 = SSIM_K1 * SSIM_K1
    c2 = SSIM_K2 * SSIM_K2
    k = _ssim_window()
    mu_x = _filter_valid(x, k)
    mu_y = _filter_valid(y, k)
    var_x = _filter_valid(x * x, k) - mu_x * mu_x
    var_y = _filter_valid(y * y, k) - mu_y * mu_y
    cov = _filter_valid(x * y, k) - mu_x * mu_y
    lum = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    cs = (2.0 * cov + c2) / (var_x + var_y + c2)
    return lum * cs, cs


def ssim(a: Raster, b: Raster) -> float:
    """Mean local structural similarity (11x11 Gaussian window, sigma 1.5)."""
    _check_pair(a, b, SSIM_WINDOW, "ssim")
    smap, _ = _ssim_maps(_as_gray2d(a), _as_gray2d(b))
    return float(smap.mean())


def _halve(arr: np.ndarray) -> np.ndarray:
    """2x2 box average with stride 2, cropping a trailing odd row/column."""
    h2, w2 = arr.shape[0] // 2, arr.shape[1] // 2
    a = arr[: h2 * 2, : w2 * 2]
    return (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2]) / 4.0


def ms_ssim(a: Raster, b: Raster, scales: int = 5,
            exponents: np.ndarray | None = None) -> float:
    """Multi-scale SSIM over a dyadic low-pass chain.

    Contrast-structure means are collected at every scale; the coarsest
    scale contributes the full SSIM (with its luminance term). Exponents
    are renormalized to sum to one, so a single-scale call with a uniform
    exponent reduces exactly to plain SSIM. Negative component means are
    clamped at zero before the fractional powers.
    """
    if exponents is None:
        exponents = MS_SSIM_EXPONENTS[:scales]
    exponents = np.asarray(exponents, dtype=np.float64)
    if scales < 1 or len(exponents) != scales:
        raise InvalidInputError(f"need one exponent per scale, got {len(exponents)} for {scales}")
    exponents = exponents / exponents.sum()
    min_dim = SSIM_WINDOW * 2 ** (scales - 1)
    _check_pair(a, b, max(min_dim, MS_SSIM_MIN_DIM if scales == 5 else min_dim), "ms_ssim")

    x, y = _as_gray2d(a), _as_gray2d(b)
    components = []
    for level in range(scales):
        smap, cs = _ssim_maps(x, y)
        components.append(float(smap.mean()) if level == scales - 1 else float(cs.mean()))
        if level < scales - 1:
            x, y = _halve(x), _halve(y)
    vals = np.maximum(np.asarray(components), 0.0)
    return float(np.prod(vals ** exponents))


def _window_sums(arr: np.ndarray, k: int) -> np.ndarray:
    """Sums over all k x k valid windows via a summed-area table."""
    h, w = arr.shape
    table = np.zeros((h + 1, w + 1), dtype=arr.dtype)
    table[1:, 1:] = np.cumsum(np.cumsum(arr, axis=0), axis=1)
    return table[k:, k:] - table[:-k, k:] - table[k:, :-k] + table[:-k, :-k]


def cw_ssim(a: Raster, b: Raster) -> float:
    """Phase-aware similarity on complex steerable-pyramid coefficients.

    For every 7x7 coefficient window of the three coarsest bands (all six
    orientations), scores (2 |sum(c_a conj(c_b))| + K) / (sum|c_a|^2 +
    sum|c_b|^2 + K) and averages over all windows. Consistent local phase
    shifts (small translations) barely move the score, unlike plain SSIM.
    """
    _check_pair(a, b, CW_SSIM_MIN_DIM, "cw_ssim")
    bands_a = band_decompose(_as_gray2d(a))
    bands_b = band_decompose(_as_gray2d(b))
    total = 0.0
    count = 0
    for level in CW_SSIM_LEVELS:
        for ca, cb in zip(bands_a[level], bands_b[level]):
            corr = _window_sums(ca * np.conj(cb), CW_SSIM_WINDOW)
            power = _window_sums(ca.real**2 + ca.imag**2 + cb.real**2 + cb.imag**2,
                                 CW_SSIM_WINDOW)
            smap = (2.0 * np.abs(corr) + CW_SSIM_K) / (power + CW_SSIM_K)
            total += float(smap.sum())
            count += smap.size
    return total / count


def hog_descriptor(img: Raster) -> np.ndarray:
    """Gradient-orientation descriptor: 9 unsigned bins, 8 px cells, 2x2 blocks.

    Blocks slide with a stride of one cell and are L2-hys normalized
    (clip at 0.2, renormalize). Descriptor length is
    (H/8 - 1) * (W/8 - 1) * 4 * 9; both dimensions must divide by 8.
    """
    gray = _as_gray2d(img)
    h, w = gray.shape
    if h % HOG_CELL or w % HOG_CELL:
        raise InvalidInputError(f"image dimensions must divide by {HOG_CELL}, got {h}x{w}")
    padded = np.pad(gray, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    magnitude = np.hypot(gx, gy)
    orientation = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.minimum((orientation / (np.pi / HOG_BINS)).astype(np.intp), HOG_BINS - 1)

    ncy, ncx = h // HOG_CELL, w // HOG_CELL
    cy = np.arange(h) // HOG_CELL
    cx = np.arange(w) // HOG_CELL
    flat = (cy[:, None] * ncx + cx[None, :]) * HOG_BINS + bins
    cells = np.bincount(flat.ravel(), weights=magnitude.ravel(),
                        minlength=ncy * ncx * HOG_BINS).reshape(ncy, ncx, HOG_BINS)

    blocks = np.concatenate(
        [cells[:-1, :-1], cells[:-1, 1:], cells[1:, :-1], cells[1:, 1:]], axis=2
    ).astype(np.float64)
    eps = 1e-12
    norm = np.sqrt((blocks * blocks).sum(axis=2, keepdims=True) + eps * eps)
    blocks = np.minimum(blocks / norm, HOG_CLIP)
    norm = np.sqrt((blocks * blocks).sum(axis=2, keepdims=True) + eps * eps)
    return (blocks / norm).ravel()


def hog_similarity(a: Raster, b: Raster) -> float:
    """Cosine similarity of the two descriptors; 1 if both are zero, 0 if one is."""
    _check_pair(a, b, HOG_CELL * 2, "hog")
    da, db = hog_descriptor(a), hog_descriptor(b)
    na, nb = float(np.linalg.norm(da)), float(np.linalg.norm(db))
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(da @ db / (na * nb))


_METRIC_FUNCS = {
    "mae": mae,
    "ssim": ssim,
    "ms_ssim": ms_ssim,
    "cw_ssim": cw_ssim,
    "hog": hog_similarity,
}


def to_dissimilarity(metric: str, value: float) -> float:
    """Flip similarity-style metrics so larger always means more different."""
    return value if metric == "mae" else 1.0 - value


@dataclass(frozen=True)
class MetricScore:
    metric: str
    value: float
    dissimilarity: float


@dataclass(frozen=True)
class SimilarityVector:
    """All metric scores for one (pair, homogenization method) combination."""

    pair_id: str
    method: str
    scores: tuple[MetricScore, ...]

    def __post_init__(self):
        ids = [s.metric for s in self.scores]
        if len(set(ids)) != len(ids):
            raise InvalidInputError(f"duplicate metric in vector for pair {self.pair_id!r}")

    def dissimilarity(self, metric: str) -> float:
        for s in self.scores:
            if s.metric == metric:
                return s.dissimilarity
        raise InvalidInputError(f"metric {metric!r} not present for pair {self.pair_id!r}")


def score_pair(input_view: Raster, reference_view: Raster, method: str = "none",
               pair_id: str = "", precomputed: PrecomputedPairs | None = None,
               metrics: tuple[str, ...] = METRIC_IDS) -> SimilarityVector:
    """Homogenize one pair and run every requested metric on the result.

    When `precomputed` is given and `method` matches its name, the
    externally produced rasters are loaded by pair id instead of running a
    built-in method.
    """
    if precomputed is not None and method == precomputed.name:
        a, b = precomputed.load(pair_id)
    else:
        a, b = homogenize_pair(input_view, reference_view, method)
    scores = []
    for metric in metrics:
        if metric not in _METRIC_FUNCS:
            raise InvalidInputError(f"unknown metric {metric!r}")
        value = _METRIC_FUNCS[metric](a, b)
        scores.append(MetricScore(metric, value, to_dissimilarity(metric, value)))
    return SimilarityVector(pair_id, method, tuple(scores))
