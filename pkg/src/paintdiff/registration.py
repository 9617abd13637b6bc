"""Intensity-based alignment: similarity-transform warping, mutual
information scoring, and a best-first perturbation search.

The moving image is warped onto the reference and scored by the mutual
information of the joint intensity histogram. Starting from an identity
parent, random child transforms are generated around it; a strictly better
child becomes the new parent, otherwise the perturbation step decays. The
search runs once per reflection state and keeps the better branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .raster import validate_gray

TAU = 2.0 * math.pi


class DegenerateImageError(ValueError):
    """Raised when an input image cannot carry alignment information."""


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(theta, TAU)
    if r <= -math.pi:
        r += TAU
    return r


@dataclass
class SimilarityTransform:
    """Shape-preserving map: optional mirror about the vertical axis, then
    rotation by theta, isotropic scaling, and translation, all about the
    image center."""

    theta: float = 0.0
    scale: float = 1.0
    tx: float = 0.0
    ty: float = 0.0
    reflect: bool = False

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        self.theta = normalize_angle(self.theta)

    def linear(self) -> np.ndarray:
        """2x2 linear part: rotation * scale * (optional reflection)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        a = self.scale * np.array([[c, -s], [s, c]])
        if self.reflect:
            a[:, 0] *= -1.0
        return a


def identity_transform(reflect: bool = False) -> SimilarityTransform:
    return SimilarityTransform(reflect=reflect)


def invert(t: SimilarityTransform) -> SimilarityTransform:
    """Transform undoing `t` (maps warped coordinates back to originals)."""
    inv = SimilarityTransform(
        theta=t.theta if t.reflect else -t.theta,
        scale=1.0 / t.scale,
        reflect=t.reflect,
    )
    tx, ty = -(inv.linear() @ np.array([t.tx, t.ty]))
    inv.tx = float(tx)
    inv.ty = float(ty)
    return inv


def apply_transform(
    img: np.ndarray, t: SimilarityTransform, out_width: int, out_height: int
) -> np.ndarray:
    """Warp a gray raster by a similarity transform (inverse mapping,
    bilinear sampling, zero fill outside the source)."""
    warped, _ = warp_with_mask(img, t, out_width, out_height)
    return warped


def warp_with_mask(
    img: np.ndarray, t: SimilarityTransform, out_width: int, out_height: int
) -> tuple[np.ndarray, np.ndarray]:
    """Like apply_transform but also returns the bool mask of output pixels
    whose sample fell inside the source image."""
    arr = validate_gray(img)
    if out_width <= 0 or out_height <= 0:
        raise ValueError(f"output dimensions must be positive, got {out_width}x{out_height}")

    h, w = arr.shape
    cx_in, cy_in = (w - 1) / 2.0, (h - 1) / 2.0
    cx_out, cy_out = (out_width - 1) / 2.0, (out_height - 1) / 2.0

    a_inv = np.linalg.inv(t.linear())
    yy, xx = np.indices((out_height, out_width), dtype=np.float64)
    qx = xx - cx_out - t.tx
    qy = yy - cy_out - t.ty
    px = a_inv[0, 0] * qx + a_inv[0, 1] * qy + cx_in
    py = a_inv[1, 0] * qx + a_inv[1, 1] * qy + cy_in

    # tolerate float noise at the source border (e.g. sin(pi) != 0 exactly)
    eps = 1e-9
    valid = (px >= -eps) & (px <= w - 1.0 + eps) & (py >= -eps) & (py <= h - 1.0 + eps)
    px = np.clip(px, 0.0, w - 1.0)
    py = np.clip(py, 0.0, h - 1.0)
    x0 = np.floor(px).astype(np.intp)
    y0 = np.floor(py).astype(np.intp)
    fx = px - x0
    fy = py - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    a = arr[y0, x0]
    b = arr[y0, x1]
    c = arr[y1, x0]
    d = arr[y1, x1]
    top = a + fx * (b - a)
    bot = c + fx * (d - c)
    out = top + fy * (bot - top)
    out[~valid] = 0.0
    return out, valid


def _bin_indices(img: np.ndarray, bins: int) -> np.ndarray:
    return np.minimum((img * bins).astype(np.int64), bins - 1).ravel()


def _joint_histogram(a: np.ndarray, b: np.ndarray, bins: int) -> np.ndarray:
    ia = _bin_indices(a, bins)
    ib = _bin_indices(b, bins)
    return np.bincount(ia * bins + ib, minlength=bins * bins).reshape(bins, bins)


def mutual_information(a: np.ndarray, b: np.ndarray, bins: int = 32) -> float:
    """Mutual information (nats) of two equal-shaped [0, 1] rasters.

    Intensities are linearly binned into a bins x bins joint histogram;
    empty cells contribute nothing. The term sum uses math.fsum, so the
    value is exactly symmetric in its arguments.
    """
    if a.shape != b.shape:
        raise ValueError(f"images must share dimensions, got {a.shape} vs {b.shape}")
    if bins < 2:
        raise ValueError(f"need at least 2 histogram bins, got {bins}")
    counts = _joint_histogram(a, b, bins)
    return _mi_from_joint(counts)


def _mi_from_joint(counts: np.ndarray) -> float:
    n = int(counts.sum())
    if n == 0:
        return 0.0
    p = counts / n
    # marginals from the integer histogram: exact, so MI(a,b) == MI(b,a) bitwise
    pa = counts.sum(axis=1) / n
    pb = counts.sum(axis=0) / n
    nz = counts > 0
    terms = p[nz] * np.log(p[nz] / np.outer(pa, pb)[nz])
    return max(0.0, math.fsum(terms.tolist()))


def entropy(img: np.ndarray, bins: int = 32) -> float:
    """Shannon entropy (nats) of an image's binned intensity distribution."""
    idx = _bin_indices(np.asarray(img, dtype=np.float64), bins)
    counts = np.bincount(idx, minlength=bins)
    p = counts[counts > 0] / idx.size
    return -math.fsum((p * np.log(p)).tolist())


@dataclass
class SearchConfig:
    """Knobs of the best-first registration search.

    Steps perturb (theta, log scale, tx, ty); translation steps are a
    fraction of the image long side. min_step_frac stops a branch once the
    step has decayed below that fraction of its initial size.
    """

    children_per_iter: int = 8
    theta_step: float = 0.2
    log_scale_step: float = 0.2
    translation_step_frac: float = 0.05
    decay: float = 0.5
    min_step_frac: float = 1e-3
    max_iters: int = 200
    histogram_bins: int = 32
    pyramid_levels: int = 3
    use_pyramid: bool = True
    mask_overlap: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")
        if self.children_per_iter < 1:
            raise ValueError(f"children_per_iter must be >= 1, got {self.children_per_iter}")
        if self.histogram_bins < 2:
            raise ValueError(f"histogram_bins must be >= 2, got {self.histogram_bins}")
        if self.pyramid_levels < 1:
            raise ValueError(f"pyramid_levels must be >= 1, got {self.pyramid_levels}")


@dataclass
class RegistrationResult:
    """Outcome of best_first_register.

    score_trace holds the per-iteration best score of the finest pyramid
    level of the winning branch and is non-decreasing; iterations counts
    all iterations the branch spent across levels.
    """

    transform: SimilarityTransform
    score: float
    iterations: int
    score_trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "theta_rad": float(self.transform.theta),
            "scale": float(self.transform.scale),
            "tx_px": float(self.transform.tx),
            "ty_px": float(self.transform.ty),
            "reflect": bool(self.transform.reflect),
            "mi_nats": float(self.score),
            "iterations": int(self.iterations),
        }


def transform_from_dict(d: dict) -> SimilarityTransform:
    return SimilarityTransform(
        theta=float(d["theta_rad"]),
        scale=float(d["scale"]),
        tx=float(d["tx_px"]),
        ty=float(d["ty_px"]),
        reflect=bool(d["reflect"]),
    )


def generate_children(
    parent: SimilarityTransform,
    step: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> list[SimilarityTransform]:
    """Perturb (theta, log scale, tx, ty) by uniform offsets within +-step.

    Reflection is never perturbed here; the outer search owns it. The child
    list is a pure function of the rng state.
    """
    if n < 1:
        raise ValueError(f"need at least one child, got n={n}")
    offsets = rng.uniform(-1.0, 1.0, size=(n, 4)) * np.asarray(step, dtype=np.float64)
    return [
        SimilarityTransform(
            theta=parent.theta + off[0],
            scale=parent.scale * math.exp(off[1]),
            tx=parent.tx + off[2],
            ty=parent.ty + off[3],
            reflect=parent.reflect,
        )
        for off in offsets
    ]


def _halve(img: np.ndarray) -> np.ndarray:
    """2x2 block mean; odd edges replicate the last row/column."""
    if img.shape[0] % 2:
        img = np.vstack([img, img[-1:]])
    if img.shape[1] % 2:
        img = np.hstack([img, img[:, -1:]])
    return (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2] + img[1::2, 1::2]) / 4.0


def _pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    """Fine-to-coarse pyramid, halving per level, floor 16 px on the short side."""
    out = [img]
    for _ in range(levels - 1):
        if min(out[-1].shape) < 32:
            break
        out.append(_halve(out[-1]))
    return out


def _score(
    moving: np.ndarray,
    reference: np.ndarray,
    t: SimilarityTransform,
    cfg: SearchConfig,
) -> float:
    h, w = reference.shape
    if cfg.mask_overlap:
        warped, valid = warp_with_mask(moving, t, w, h)
        if valid.sum() < 2:
            return 0.0
        counts = _joint_histogram(warped[valid], reference[valid], cfg.histogram_bins)
        return _mi_from_joint(counts)
    warped = apply_transform(moving, t, w, h)
    return mutual_information(warped, reference, cfg.histogram_bins)


def _climb(
    moving: np.ndarray,
    reference: np.ndarray,
    parent: SimilarityTransform,
    cfg: SearchConfig,
    rng: np.random.Generator,
) -> tuple[SimilarityTransform, float, list[float], int]:
    """Hill-climb at one pyramid level; returns (best, score, trace, iters)."""
    long_side = float(max(reference.shape))
    base_step = np.array(
        [
            cfg.theta_step,
            cfg.log_scale_step,
            cfg.translation_step_frac * long_side,
            cfg.translation_step_frac * long_side,
        ]
    )
    mult = 1.0
    parent_score = _score(moving, reference, parent, cfg)
    trace: list[float] = []
    iters = 0
    while iters < cfg.max_iters and mult >= cfg.min_step_frac:
        children = generate_children(parent, base_step * mult, cfg.children_per_iter, rng)
        best_child = None
        best_score = parent_score
        for child in children:
            s = _score(moving, reference, child, cfg)
            if s > best_score:
                best_child, best_score = child, s
        if best_child is not None:
            parent, parent_score = best_child, best_score
        else:
            mult *= cfg.decay
        iters += 1
        trace.append(parent_score)
    return parent, parent_score, trace, iters


def _search_branch(
    moving: np.ndarray,
    reference: np.ndarray,
    reflect: bool,
    cfg: SearchConfig,
    rng: np.random.Generator,
) -> RegistrationResult:
    levels = cfg.pyramid_levels if cfg.use_pyramid else 1
    mov_pyr = _pyramid(moving, levels)
    ref_pyr = _pyramid(reference, levels)
    depth = min(len(mov_pyr), len(ref_pyr))

    parent = identity_transform(reflect)
    total_iters = 0
    score = 0.0
    trace: list[float] = []
    for level in range(depth - 1, -1, -1):
        if level < depth - 1:
            # translations live in pixels of the current level
            parent = SimilarityTransform(
                theta=parent.theta,
                scale=parent.scale,
                tx=parent.tx * 2.0,
                ty=parent.ty * 2.0,
                reflect=parent.reflect,
            )
        parent, score, trace, iters = _climb(mov_pyr[level], ref_pyr[level], parent, cfg, rng)
        total_iters += iters
    return RegistrationResult(transform=parent, score=score, iterations=total_iters, score_trace=trace)


def best_first_register(
    moving: np.ndarray, reference: np.ndarray, cfg: SearchConfig | None = None
) -> RegistrationResult:
    """Align `moving` to `reference`, maximizing mutual information.

    Runs the perturbation search coarse-to-fine once per reflection state
    and returns the higher-scoring branch (ties prefer no reflection).
    Deterministic for a fixed config and seed. Raises DegenerateImageError
    when either image is constant.
    """
    mov = validate_gray(moving, "moving image")
    ref = validate_gray(reference, "reference image")
    cfg = cfg or SearchConfig()
    if mov.max() == mov.min() or ref.max() == ref.min():
        raise DegenerateImageError("uninformative image: MI identically 0")

    rng = np.random.default_rng(cfg.rng_seed)
    plain = _search_branch(mov, ref, False, cfg, rng)
    mirrored = _search_branch(mov, ref, True, cfg, rng)
    return plain if plain.score >= mirrored.score else mirrored
