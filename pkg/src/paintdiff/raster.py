"""Image rasters: grayscale conversion, bilinear resampling, PNG/PGM I/O.

Images are plain numpy arrays. Grayscale rasters are 2-D float64 arrays with
intensities in [0, 1]; color images are uint8 arrays of shape (H, W, 3).
All functions are pure; nothing here mutates its inputs.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

# ITU-R BT.601 luma weights (R, G, B).
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def validate_gray(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Check that `img` is a non-empty 2-D raster with values in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} intensities must lie in [0, 1]")
    return arr


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) image with channels in [0, 255] to a [0, 1] gray raster."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) image, got shape {arr.shape}")
    w = np.asarray(LUMA_WEIGHTS)
    return (arr @ w) / 255.0


def resize_bilinear(img: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Resample a gray raster to (new_height, new_width) by bilinear interpolation.

    Uses pixel-center alignment: output sample k maps to source coordinate
    (k + 0.5) * scale - 0.5. Samples outside the source grid clamp to the
    nearest border pixel. Output values never leave [min(img), max(img)].
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D array, got shape {arr.shape}")
    if new_width <= 0 or new_height <= 0:
        raise ValueError(f"target dimensions must be positive, got {new_width}x{new_height}")

    h, w = arr.shape
    cy = np.clip((np.arange(new_height) + 0.5) * (h / new_height) - 0.5, 0.0, h - 1.0)
    cx = np.clip((np.arange(new_width) + 0.5) * (w / new_width) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(cy).astype(np.intp)
    x0 = np.floor(cx).astype(np.intp)
    fy = (cy - y0)[:, None]
    fx = (cx - x0)[None, :]
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)

    a = arr[np.ix_(y0, x0)]
    b = arr[np.ix_(y0, x1)]
    c = arr[np.ix_(y1, x0)]
    d = arr[np.ix_(y1, x1)]
    top = a + fx * (b - a)
    bot = c + fx * (d - c)
    out = top + fy * (bot - top)
    # Guard against last-ulp overshoot so the value range is preserved exactly.
    np.clip(out, arr.min(), arr.max(), out=out)
    return out


def crop(img: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    """Cut the half-open window [x0, x1) x [y0, y1) out of a raster."""
    arr = np.asarray(img)
    h, w = arr.shape[:2]
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError(f"crop ({x0},{y0},{x1},{y1}) does not lie within a {w}x{h} image")
    return arr[y0:y1, x0:x1].copy()


def gray_to_rgb(img: np.ndarray) -> np.ndarray:
    """Expand a [0, 1] gray raster to an (H, W, 3) uint8 image."""
    g = quantize_u8(img)
    return np.repeat(g[:, :, None], 3, axis=2)


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to uint8 via round(v * 255), half away from zero."""
    arr = np.asarray(img, dtype=np.float64)
    return np.floor(arr * 255.0 + 0.5).clip(0, 255).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Load a PNG/PGM file as float gray (2-D) or uint8 RGB (H, W, 3).

    Palette and RGBA files are flattened to RGB; 8-bit grayscale maps to
    v / 255. Anything unreadable raises OSError naming the path.
    """
    try:
        with Image.open(path) as im:
            if im.mode in ("P", "RGBA"):
                im = im.convert("RGB")
            if im.mode == "L":
                return np.asarray(im, dtype=np.float64) / 255.0
            if im.mode == "RGB":
                return np.asarray(im, dtype=np.uint8)
            raise OSError(f"cannot read image '{path}': unsupported mode {im.mode!r}")
    except FileNotFoundError:
        raise OSError(f"cannot read image '{path}': file not found") from None
    except OSError as exc:
        raise OSError(f"cannot read image '{path}': {exc}") from None


def load_gray(path) -> np.ndarray:
    """Load any supported image as a [0, 1] gray raster (RGB is converted)."""
    img = load_image(path)
    if img.ndim == 3:
        return to_grayscale(img)
    return img


def save_gray(img: np.ndarray, path) -> None:
    """Write a [0, 1] gray raster as 8-bit PNG or binary PGM (by file suffix)."""
    arr = validate_gray(img)
    try:
        Image.fromarray(quantize_u8(arr), mode="L").save(path)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot write image '{path}': {exc}") from None


def save_rgb(img: np.ndarray, path) -> None:
    """Write an (H, W, 3) uint8 image as 8-bit RGB PNG."""
    arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    try:
        Image.fromarray(arr, mode="RGB").save(path)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot write image '{path}': {exc}") from None
