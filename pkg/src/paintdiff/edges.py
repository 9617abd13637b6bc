"""Edge-strength maps: Sobel gradients, gradient magnitude, non-maximum
suppression, multi-scale averaging, and binarization.

An edge map is a 2-D float raster with values in [0, 1], normalized so its
maximum is 1 unless the map is identically zero. Binary maps are boolean
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .raster import load_gray, load_image, resize_bilinear, validate_gray

SOBEL_GX = np.array([[1.0, 0.0, -1.0], [2.0, 0.0, -2.0], [1.0, 0.0, -1.0]])
SOBEL_GY = np.array([[1.0, 2.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -2.0, -1.0]])

# Magnitudes below this are treated as no-edge and suppressed by NMS.
NMS_EPSILON = 1e-6


class GradientPair(NamedTuple):
    gx: np.ndarray
    gy: np.ndarray


@dataclass
class MultiscaleConfig:
    """Settings for cross-scale edge averaging.

    scales: resize factors applied to the input before edge detection.
    target_long_side: long side of the output map (aspect preserved).
    nms_stage: "per_scale" thins each scale's map before averaging,
        "after_average" thins the averaged map once.
    """

    scales: tuple[float, ...] = (1.5, 1.0, 0.5)
    target_long_side: int = 1000
    nms_stage: str = "per_scale"

    def __post_init__(self):
        self.scales = tuple(float(s) for s in self.scales)
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError(f"scales must be non-empty and positive, got {self.scales}")
        if self.target_long_side <= 0:
            raise ValueError(f"target_long_side must be positive, got {self.target_long_side}")
        if self.nms_stage not in ("per_scale", "after_average"):
            raise ValueError(f"nms_stage must be 'per_scale' or 'after_average', got {self.nms_stage!r}")


def sobel_gradients(img: np.ndarray) -> GradientPair:
    """Cross-correlate a gray raster with the 3x3 Sobel kernels.

    Border pixels use replicated-edge padding. Requires at least a 3x3 image.
    """
    arr = validate_gray(img)
    h, w = arr.shape
    if h < 3 or w < 3:
        raise ValueError(f"image must be at least 3x3 for Sobel gradients, got {w}x{h}")
    p = np.pad(arr, 1, mode="edge")

    def win(dy, dx):
        return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    gx = (win(-1, -1) + 2.0 * win(0, -1) + win(1, -1)) - (win(-1, 1) + 2.0 * win(0, 1) + win(1, 1))
    gy = (win(-1, -1) + 2.0 * win(-1, 0) + win(-1, 1)) - (win(1, -1) + 2.0 * win(1, 0) + win(1, 1))
    return GradientPair(gx, gy)


def gradient_magnitude(g: GradientPair) -> np.ndarray:
    """Per-pixel Euclidean magnitude of a gradient pair, normalized to max 1."""
    gx, gy = g
    if gx.shape != gy.shape:
        raise ValueError(f"gradient shapes differ: {gx.shape} vs {gy.shape}")
    mag = np.sqrt(gx * gx + gy * gy)
    peak = mag.max()
    if peak > 0.0:
        mag = mag / peak
    return mag


def sobel_edge_map(img: np.ndarray) -> np.ndarray:
    """Default detector: normalized Sobel gradient magnitude."""
    return gradient_magnitude(sobel_gradients(img))


# Neighbor offsets for the 8 quantized gradient sectors (45 degrees each).
_SECTOR_DX = np.array([1, 1, 0, -1, -1, -1, 0, 1])
_SECTOR_DY = np.array([0, 1, 1, 1, 0, -1, -1, -1])


def non_max_suppression(mag: np.ndarray, g: GradientPair) -> np.ndarray:
    """Thin an edge map by suppressing pixels not locally maximal along the
    gradient direction.

    The gradient direction is quantized to 8 sectors. A pixel survives when
    its magnitude is >= the neighbor ahead and > the neighbor behind along
    the quantized direction (the asymmetry breaks plateau ties so exactly
    one side of a flat ridge survives). Out-of-image neighbors count as 0.
    Magnitudes below NMS_EPSILON are zeroed.
    """
    mag = np.asarray(mag, dtype=np.float64)
    gx, gy = g
    if mag.shape != gx.shape or mag.shape != gy.shape:
        raise ValueError(f"shape mismatch: magnitude {mag.shape}, gradients {gx.shape}/{gy.shape}")

    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag

    ang = np.arctan2(gy, gx)
    sector = np.floor((ang + np.pi / 8.0) / (np.pi / 4.0)).astype(np.intp) % 8
    dx = _SECTOR_DX[sector]
    dy = _SECTOR_DY[sector]

    yy, xx = np.indices((h, w))
    ahead = padded[yy + 1 + dy, xx + 1 + dx]
    behind = padded[yy + 1 - dy, xx + 1 - dx]
    keep = (mag >= ahead) & (mag > behind) & (mag >= NMS_EPSILON)
    return np.where(keep, mag, 0.0)


def _normalize_max(edge: np.ndarray) -> np.ndarray:
    peak = edge.max()
    return edge / peak if peak > 0.0 else edge


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def target_dims(width: int, height: int, target_long_side: int) -> tuple[int, int]:
    """Aspect-preserving dimensions with the long side set to target_long_side."""
    if width >= height:
        return target_long_side, max(1, _round_half_up(height * target_long_side / width))
    return max(1, _round_half_up(width * target_long_side / height)), target_long_side


def multiscale_edge_map(
    img: np.ndarray,
    cfg: MultiscaleConfig | None = None,
    detector: Callable[[np.ndarray], np.ndarray] = sobel_edge_map,
) -> np.ndarray:
    """Average thinned edge maps computed at several scales of the input.

    For each scale the image is resized, the detector runs, the result is
    thinned by NMS (direction field from the scaled image's Sobel gradients)
    and resized to the target size. Per-scale maps are normalized to max 1
    before the mean, and the mean is normalized again.
    """
    arr = validate_gray(img)
    cfg = cfg or MultiscaleConfig()
    h, w = arr.shape
    tw, th = target_dims(w, h, cfg.target_long_side)

    acc = np.zeros((th, tw))
    for s in cfg.scales:
        sw = max(3, _round_half_up(w * s))
        sh = max(3, _round_half_up(h * s))
        scaled = resize_bilinear(arr, sw, sh)
        em = detector(scaled)
        if cfg.nms_stage == "per_scale":
            em = non_max_suppression(em, sobel_gradients(scaled))
        em = _normalize_max(resize_bilinear(em, tw, th))
        acc += em
    acc /= len(cfg.scales)

    if cfg.nms_stage == "after_average":
        base = resize_bilinear(arr, tw, th)
        acc = non_max_suppression(acc, sobel_gradients(base))
    return _normalize_max(acc)


def otsu_threshold(edge: np.ndarray) -> float:
    """Threshold maximizing between-class variance over a 256-bin histogram.

    Candidate k splits bins [0..k] from (k..255]; the returned threshold is
    the upper edge (k+1)/256 of the best split. Comparisons use exact integer
    arithmetic, ties resolve to the lowest k. A map whose mass sits in a
    single bin yields a threshold at the map maximum (empty mask downstream).
    """
    arr = np.asarray(edge, dtype=np.float64)
    bins = np.minimum((arr * 256.0).astype(np.int64), 255)
    hist = np.bincount(bins.ravel(), minlength=256)
    total = int(hist.sum())
    total_sum = int((np.arange(256) * hist).sum())

    best_k = -1
    best_num = 0  # squared between-class difference, exact int
    best_den = 1
    w0 = 0
    s0 = 0
    for k in range(256):
        w0 += int(hist[k])
        s0 += k * int(hist[k])
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        d = s0 * w1 - (total_sum - s0) * w0
        num = d * d
        den = w0 * w1
        # compare num/den > best_num/best_den without division
        if num * best_den > best_num * den:
            best_num, best_den, best_k = num, den, k
    if best_k < 0 or best_num == 0:
        return float(arr.max())
    return (best_k + 1) / 256.0


def binarize(edge: np.ndarray, threshold: float | None = None) -> np.ndarray:
    """Binarize an edge map: mask = strength > threshold.

    threshold=None selects the Otsu threshold; a fixed threshold must lie
    in [0, 1].
    """
    arr = np.asarray(edge, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D edge map, got shape {arr.shape}")
    if threshold is None:
        threshold = otsu_threshold(arr)
    elif not 0.0 <= threshold <= 1.0:
        raise ValueError(f"fixed threshold must lie in [0, 1], got {threshold}")
    return arr > threshold


def import_edge_map(path, target_width: int, target_height: int) -> np.ndarray:
    """Load an externally produced grayscale edge map and fit it to the pipeline.

    The file must be grayscale PNG/PGM; it is resized to the target dims and
    renormalized to max 1. Lets edge maps from other detectors (e.g. deep
    networks) enter the pipeline as data.
    """
    img = load_image(path)
    if img.ndim != 2:
        raise OSError(f"cannot read edge map '{path}': expected a grayscale file")
    return _normalize_max(resize_bilinear(img, target_width, target_height))


def load_binary_mask(path) -> np.ndarray:
    """Load a persisted binary edge map (0/255 grayscale file) as a bool mask."""
    return load_gray(path) > 0.5
