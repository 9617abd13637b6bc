"""Pixel-wise comparison of two aligned binary edge maps and the
three-color overlay rendering of the result."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class DiffClass(IntEnum):
    NEITHER = 0
    MOVING_ONLY = 1
    REFERENCE_ONLY = 2
    BOTH = 3


@dataclass(frozen=True)
class OverlayPalette:
    """RGB colors per difference class; the four must be pairwise distinct.

    Defaults follow the painter's perspective: the moving image is the
    photograph (purple), the reference is the painting (green), overlapping
    edges are black on a white background.
    """

    moving_only: tuple[int, int, int] = (160, 32, 160)
    reference_only: tuple[int, int, int] = (0, 160, 0)
    both: tuple[int, int, int] = (0, 0, 0)
    neither: tuple[int, int, int] = (255, 255, 255)

    def __post_init__(self):
        colors = [self.moving_only, self.reference_only, self.both, self.neither]
        if len(set(colors)) != 4:
            raise ValueError(f"palette colors must be pairwise distinct, got {colors}")


PHOTO_COLOR = OverlayPalette().moving_only
PAINTING_COLOR = OverlayPalette().reference_only


def palette_for_perspective(perspective: str) -> OverlayPalette:
    """Palette keeping purple on the photograph and green on the painting.

    Under the painter's perspective the photograph moves; under the viewer's
    the painting moves, so the role colors swap sides.
    """
    if perspective == "painter":
        return OverlayPalette()
    if perspective == "viewer":
        return OverlayPalette(moving_only=PAINTING_COLOR, reference_only=PHOTO_COLOR)
    raise ValueError(f"perspective must be 'painter' or 'viewer', got {perspective!r}")


def classify_difference(moving_edges: np.ndarray, reference_edges: np.ndarray) -> np.ndarray:
    """Label each pixel of two aligned binary masks.

    Returns a uint8 raster of DiffClass codes: moving-only, reference-only,
    both, or neither.
    """
    m = np.asarray(moving_edges, dtype=bool)
    r = np.asarray(reference_edges, dtype=bool)
    if m.shape != r.shape:
        raise ValueError(f"edge maps must share dimensions, got {m.shape} vs {r.shape}")
    return (m.astype(np.uint8) + 2 * r.astype(np.uint8)).astype(np.uint8)


def residual_mask(diff: np.ndarray, which: DiffClass) -> np.ndarray:
    """Bool mask of pixels labeled `which`."""
    return np.asarray(diff) == int(which)


def class_counts(diff: np.ndarray) -> dict[str, int]:
    """Pixel count per class, keyed for the JSON report."""
    d = np.asarray(diff)
    return {
        "moving_only": int((d == DiffClass.MOVING_ONLY).sum()),
        "reference_only": int((d == DiffClass.REFERENCE_ONLY).sum()),
        "both": int((d == DiffClass.BOTH).sum()),
        "neither": int((d == DiffClass.NEITHER).sum()),
    }


def render_overlay(diff: np.ndarray, palette: OverlayPalette | None = None) -> np.ndarray:
    """Paint each pixel with its class color; returns an (H, W, 3) uint8 image."""
    palette = palette or OverlayPalette()
    lut = np.array(
        [palette.neither, palette.moving_only, palette.reference_only, palette.both],
        dtype=np.uint8,
    )
    return lut[np.asarray(diff, dtype=np.uint8)]
