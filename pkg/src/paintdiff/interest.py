"""Centres of interest: connected components of a binary residual mask,
area/perimeter filtering, box extension, and fixpoint merging of
overlapping boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass
class InterestParams:
    """Tuning constants: minimum component area `a`, minimum perimeter `p`
    (both strict), and per-side box extension fraction `c` of the long
    image side."""

    a: int = 100
    p: int = 70
    c: float = 0.0023

    def __post_init__(self):
        if self.a < 0 or self.p < 0 or self.c < 0:
            raise ValueError(f"a, p, c must be non-negative, got a={self.a} p={self.p} c={self.c}")


@dataclass
class Component:
    """One 8-connected region of mask pixels.

    xs/ys hold the pixel coordinates in raster order; perimeter counts the
    pixels with at least one 4-neighbor outside the component (or outside
    the image).
    """

    xs: np.ndarray
    ys: np.ndarray
    area: int
    perimeter: int

    def bounding_box(self) -> "InterestBox":
        return InterestBox(
            x0=int(self.xs.min()),
            y0=int(self.ys.min()),
            x1=int(self.xs.max()) + 1,
            y1=int(self.ys.max()) + 1,
            source_components=1,
        )


@dataclass
class InterestBox:
    """Axis-aligned box, top-left inclusive, bottom-right exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int
    source_components: int = 1

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"empty box ({self.x0},{self.y0},{self.x1},{self.y1})")

    def overlaps(self, other: "InterestBox") -> bool:
        """True when the intersection has positive area (touching edges do not count)."""
        return (
            self.x0 < other.x1
            and other.x0 < self.x1
            and self.y0 < other.y1
            and other.y0 < self.y1
        )

    def union(self, other: "InterestBox") -> "InterestBox":
        return InterestBox(
            x0=min(self.x0, other.x0),
            y0=min(self.y0, other.y0),
            x1=max(self.x1, other.x1),
            y1=max(self.y1, other.y1),
            source_components=self.source_components + other.source_components,
        )

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "y0": self.y0,
            "x1": self.x1,
            "y1": self.y1,
            "source_components": self.source_components,
        }


_EIGHT = np.ones((3, 3), dtype=np.intp)


def connected_components(mask: np.ndarray) -> list[Component]:
    """8-connected components of the 1-pixels, ordered by their first pixel
    in raster order (topmost, then leftmost)."""
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {m.shape}")
    if not m.any():
        return []

    labels, n = ndimage.label(m, structure=_EIGHT)
    # component pixels 4-adjacent to background or the image border
    interior = np.zeros_like(m)
    interior[1:-1, 1:-1] = m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    boundary = m & ~interior

    comps = []
    for sl, lab in zip(ndimage.find_objects(labels, n), range(1, n + 1)):
        local = labels[sl] == lab
        ys, xs = np.nonzero(local)
        ys = ys + sl[0].start
        xs = xs + sl[1].start
        comps.append(
            Component(
                xs=xs,
                ys=ys,
                area=int(local.sum()),
                perimeter=int((boundary[sl] & local).sum()),
            )
        )
    comps.sort(key=lambda comp: (int(comp.ys[0]), int(comp.xs[0])))
    return comps


def filter_components(comps: list[Component], params: InterestParams) -> list[Component]:
    """Keep components whose area exceeds `a` and perimeter exceeds `p`."""
    return [comp for comp in comps if comp.area > params.a and comp.perimeter > params.p]


def extend_box(box: InterestBox, c: float, img_width: int, img_height: int) -> InterestBox:
    """Grow a box outward by round(c * max(W, H)) pixels per side, clamped
    to the image bounds."""
    pad = int(np.floor(c * max(img_width, img_height) + 0.5))
    return InterestBox(
        x0=max(0, box.x0 - pad),
        y0=max(0, box.y0 - pad),
        x1=min(img_width, box.x1 + pad),
        y1=min(img_height, box.y1 + pad),
        source_components=box.source_components,
    )


def merge_overlapping(boxes: list[InterestBox]) -> list[InterestBox]:
    """Merge overlapping boxes into their union until none overlap.

    Each merging pass removes at least one box, so the pass count is bounded
    by the initial box count. Output is sorted by (y0, x0) and independent of
    the input order.
    """
    merged = list(boxes)
    for _ in range(max(1, len(boxes))):
        changed = False
        i = 0
        while i < len(merged):
            j = i + 1
            while j < len(merged):
                if merged[i].overlaps(merged[j]):
                    merged[i] = merged[i].union(merged.pop(j))
                    changed = True
                else:
                    j += 1
            i += 1
        if not changed:
            break
    for i in range(len(merged)):
        for j in range(i + 1, len(merged)):
            if merged[i].overlaps(merged[j]):  # pragma: no cover - pass bound guarantees this
                raise RuntimeError("box merging did not reach a fixpoint")
    merged.sort(key=lambda b: (b.y0, b.x0, b.x1, b.y1))
    return merged


def centres_of_interest(mask: np.ndarray, params: InterestParams | None = None) -> list[InterestBox]:
    """Full extraction: components -> area/perimeter filter -> bounding
    boxes -> extension by `c` -> fixpoint merge."""
    params = params or InterestParams()
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    comps = filter_components(connected_components(m), params)
    boxes = [extend_box(comp.bounding_box(), params.c, w, h) for comp in comps]
    return merge_overlapping(boxes)


def draw_boxes(
    image: np.ndarray, boxes: list[InterestBox], color: tuple[int, int, int] = (255, 0, 0)
) -> np.ndarray:
    """Draw 1-px box outlines over an (H, W, 3) uint8 image; returns a copy."""
    out = np.asarray(image, dtype=np.uint8).copy()
    if out.ndim != 3 or out.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {out.shape}")
    col = np.asarray(color, dtype=np.uint8)
    for b in boxes:
        out[b.y0, b.x0 : b.x1] = col
        out[b.y1 - 1, b.x0 : b.x1] = col
        out[b.y0 : b.y1, b.x0] = col
        out[b.y0 : b.y1, b.x1 - 1] = col
    return out
