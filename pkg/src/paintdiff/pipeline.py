"""End-to-end run: crop, grayscale, registration, warping, multi-scale
edges, binarization, difference classification, and centre extraction,
with all artifacts persisted to an output directory.

Every stage consumes exactly what the corresponding artifact file holds
(8-bit quantized where the file is 8-bit), so re-running a stage from the
report's parameters reproduces the one-shot artifacts byte for byte.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diffmap, interest, raster, registration
from .edges import MultiscaleConfig, binarize, multiscale_edge_map
from .registration import DegenerateImageError, SearchConfig

ARTIFACTS = {
    "warped": "warped.png",
    "edges_moving": "edges_moving.png",
    "edges_reference": "edges_reference.png",
    "edges_moving_binary": "edges_moving_binary.png",
    "edges_reference_binary": "edges_reference_binary.png",
    "overlay": "overlay.png",
    "residual": "residual.png",
    "annotated": "annotated.png",
    "report": "report.json",
}

BOX_COLOR = (255, 0, 0)


@dataclass
class PipelineConfig:
    """Everything a pipeline run depends on.

    Under the painter's perspective (default) the moving input is the
    photograph and the reference is the painting; the viewer's perspective
    swaps which image is warped and the overlay role colors. The optional
    crop applies to the moving image before registration. threshold=None
    binarizes with Otsu.
    """

    moving_path: str
    reference_path: str
    out_dir: str = "out"
    crop: tuple[int, int, int, int] | None = None
    perspective: str = "painter"
    threshold: float | None = None
    multiscale: MultiscaleConfig = field(default_factory=MultiscaleConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    interest: interest.InterestParams = field(default_factory=interest.InterestParams)

    def __post_init__(self):
        if not self.moving_path or not self.reference_path:
            raise ValueError("moving and reference image paths must be non-empty")
        if self.perspective not in ("painter", "viewer"):
            raise ValueError(f"perspective must be 'painter' or 'viewer', got {self.perspective!r}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"fixed threshold must lie in [0, 1], got {self.threshold}")
        if self.crop is not None:
            self.crop = tuple(int(v) for v in self.crop)
            if len(self.crop) != 4:
                raise ValueError(f"crop must be (x0, y0, x1, y1), got {self.crop}")

    def params_dict(self) -> dict:
        """Every effective parameter, for the report (reproducibility record)."""
        ms, se, ip = self.multiscale, self.search, self.interest
        return {
            "moving_path": self.moving_path,
            "reference_path": self.reference_path,
            "crop": list(self.crop) if self.crop else None,
            "perspective": self.perspective,
            "threshold": self.threshold,
            "multiscale": {
                "scales": list(ms.scales),
                "target_long_side": ms.target_long_side,
                "nms_stage": ms.nms_stage,
            },
            "search": {
                "children_per_iter": se.children_per_iter,
                "theta_step": se.theta_step,
                "log_scale_step": se.log_scale_step,
                "translation_step_frac": se.translation_step_frac,
                "decay": se.decay,
                "min_step_frac": se.min_step_frac,
                "max_iters": se.max_iters,
                "bins": se.histogram_bins,
                "pyramid_levels": se.pyramid_levels,
                "use_pyramid": se.use_pyramid,
                "mask_overlap": se.mask_overlap,
                "seed": se.rng_seed,
            },
            "interest": {"a": ip.a, "p": ip.p, "c": ip.c},
        }


@contextmanager
def _stage(name: str):
    """Attach the failing stage's name to I/O and degenerate-input errors."""
    try:
        yield
    except DegenerateImageError as exc:
        raise DegenerateImageError(f"[{name}] {exc}") from None
    except OSError as exc:
        raise OSError(f"[{name}] {exc}") from None


def _requantize(img: np.ndarray) -> np.ndarray:
    """Round-trip through 8 bits, matching what the saved artifact holds."""
    return raster.quantize_u8(img) / 255.0


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute the full comparison pipeline and write all artifacts.

    Returns the report dict (also written to report.json): effective
    parameters, registration result, per-class pixel counts, centre boxes,
    and artifact file names. Deterministic for a fixed config and seed.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with _stage("load"):
        moving = raster.load_gray(cfg.moving_path)
        reference = raster.load_gray(cfg.reference_path)
    if cfg.perspective == "viewer":
        moving, reference = reference, moving
    if cfg.crop is not None:
        moving = raster.crop(moving, *cfg.crop)

    with _stage("register"):
        reg = registration.best_first_register(moving, reference, cfg.search)

    h, w = reference.shape
    warped = registration.apply_transform(moving, reg.transform, w, h)
    with _stage("warp"):
        raster.save_gray(warped, out / ARTIFACTS["warped"])
    warped = _requantize(warped)

    with _stage("edges"):
        em_moving = multiscale_edge_map(warped, cfg.multiscale)
        em_reference = multiscale_edge_map(reference, cfg.multiscale)
        bin_moving = binarize(em_moving, cfg.threshold)
        bin_reference = binarize(em_reference, cfg.threshold)
        raster.save_gray(em_moving, out / ARTIFACTS["edges_moving"])
        raster.save_gray(em_reference, out / ARTIFACTS["edges_reference"])
        raster.save_gray(bin_moving.astype(np.float64), out / ARTIFACTS["edges_moving_binary"])
        raster.save_gray(bin_reference.astype(np.float64), out / ARTIFACTS["edges_reference_binary"])

    diff = diffmap.classify_difference(bin_moving, bin_reference)
    painting_only = (
        diffmap.DiffClass.REFERENCE_ONLY
        if cfg.perspective == "painter"
        else diffmap.DiffClass.MOVING_ONLY
    )
    residual = diffmap.residual_mask(diff, painting_only)
    overlay = diffmap.render_overlay(diff, diffmap.palette_for_perspective(cfg.perspective))
    with _stage("diff"):
        raster.save_rgb(overlay, out / ARTIFACTS["overlay"])
        raster.save_gray(residual.astype(np.float64), out / ARTIFACTS["residual"])

    boxes = interest.centres_of_interest(residual, cfg.interest)

    # annotation draws over the painting-role image at edge-map resolution
    painting_img = reference if cfg.perspective == "painter" else moving
    th, tw = diff.shape
    annotated = interest.draw_boxes(
        raster.gray_to_rgb(raster.resize_bilinear(painting_img, tw, th)), boxes, BOX_COLOR
    )
    with _stage("annotate"):
        raster.save_rgb(annotated, out / ARTIFACTS["annotated"])

    report = {
        "params": cfg.params_dict(),
        "registration": reg.to_dict(),
        "diff_counts": diffmap.class_counts(diff),
        "boxes": [b.to_dict() for b in boxes],
        "artifact_paths": {k: v for k, v in ARTIFACTS.items() if k != "report"},
    }
    with _stage("report"):
        write_report(report, out / ARTIFACTS["report"])
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
