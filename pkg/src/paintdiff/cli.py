"""Command-line surface: run individual stages or the whole pipeline.

Subcommands mirror the stage artifacts (edges, register, warp, diff,
centres, pipeline) so a run can be tuned and re-inspected step by step.
Exit codes: 0 success, 2 usage error, 3 I/O error, 4 degenerate input.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import diffmap, interest, raster, registration
from .edges import MultiscaleConfig, binarize, load_binary_mask, multiscale_edge_map
from .pipeline import PipelineConfig, run_pipeline, write_report
from .registration import DegenerateImageError, SearchConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4


def _add_multiscale_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scales", type=float, nargs="+", default=None, help="edge-map scale factors (default 1.5 1 0.5)")
    p.add_argument("--long-side", type=int, default=None, help="target long side of edge maps (default 1000)")
    p.add_argument("--nms-stage", choices=["per_scale", "after_average"], default=None,
                   help="thin per scale before averaging, or once after (default per_scale)")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=int, default=None, help="histogram bins for mutual information (default 32)")
    p.add_argument("--seed", type=int, default=None, help="search RNG seed (default 0)")
    p.add_argument("--children", type=int, default=None, help="children per iteration (default 8)")
    p.add_argument("--max-iters", type=int, default=None, help="max iterations per pyramid level (default 200)")
    p.add_argument("--decay", type=float, default=None, help="step decay factor in (0,1) (default 0.5)")
    p.add_argument("--min-step-frac", type=float, default=None, help="stop when steps shrink below this fraction (default 1e-3)")
    p.add_argument("--theta-step", type=float, default=None, help="initial rotation step, radians (default 0.2)")
    p.add_argument("--scale-step", type=float, default=None, help="initial log-scale step (default 0.2)")
    p.add_argument("--trans-step-frac", type=float, default=None, help="initial translation step as fraction of long side (default 0.05)")
    p.add_argument("--pyramid-levels", type=int, default=None, help="coarse-to-fine levels (default 3)")
    p.add_argument("--no-pyramid", action="store_true", default=False, help="search at full resolution only")
    p.add_argument("--mask-overlap", action="store_true", default=False, help="score only pixels inside the warped overlap")


def _add_interest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", type=int, default=None, help="minimum component area, strict (default 100)")
    p.add_argument("--p", type=int, default=None, help="minimum component perimeter, strict (default 70)")
    p.add_argument("--c", type=float, default=None, help="box extension fraction of the long side (default 0.0023)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paintdiff", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edges", help="multi-scale edge map of one image")
    p.add_argument("image")
    p.add_argument("--out", required=True, help="output edge map (PNG/PGM)")
    p.add_argument("--bin-out", default=None, help="also write the binarized map here")
    p.add_argument("--threshold", type=float, default=None, help="fixed binarization threshold (default: Otsu)")
    _add_multiscale_flags(p)
    p.set_defaults(func=cmd_edges)

    p = sub.add_parser("register", help="align a moving image to a reference")
    p.add_argument("moving")
    p.add_argument("reference")
    p.add_argument("--out", required=True, help="output registration JSON")
    p.add_argument("--crop", type=int, nargs=4, metavar=("X0", "Y0", "X1", "Y1"), default=None,
                   help="crop the moving image first")
    _add_search_flags(p)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("warp", help="apply a saved transform to an image")
    p.add_argument("moving")
    p.add_argument("--transform", required=True, help="registration JSON (or a full report.json)")
    p.add_argument("--like", default=None, help="take output dimensions from this image")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--crop", type=int, nargs=4, metavar=("X0", "Y0", "X1", "Y1"), default=None)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("diff", help="classify two binarized edge maps")
    p.add_argument("moving_edges")
    p.add_argument("reference_edges")
    p.add_argument("--overlay-out", default=None, help="color overlay PNG")
    p.add_argument("--counts-out", default=None, help="class-count JSON")
    p.add_argument("--residual-out", default=None, help="painting-only mask PNG")
    p.add_argument("--perspective", choices=["painter", "viewer"], default="painter")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("centres", help="extract centre-of-interest boxes from a mask")
    p.add_argument("mask")
    p.add_argument("--out", required=True, help="output box-list JSON")
    p.add_argument("--image", default=None, help="draw boxes over this image")
    p.add_argument("--annotated-out", default=None, help="where to write the annotated PNG")
    _add_interest_flags(p)
    p.set_defaults(func=cmd_centres)

    p = sub.add_parser("pipeline", help="full run: register, edges, diff, centres")
    p.add_argument("moving", nargs="?", default=None, help="photograph (painter perspective)")
    p.add_argument("reference", nargs="?", default=None, help="painting (painter perspective)")
    p.add_argument("--config", default=None, help="JSON config (same schema as report params)")
    p.add_argument("-o", "--out-dir", default=None, help="artifact directory (default out)")
    p.add_argument("--crop", type=int, nargs=4, metavar=("X0", "Y0", "X1", "Y1"), default=None)
    p.add_argument("--perspective", choices=["painter", "viewer"], default=None)
    p.add_argument("--threshold", type=float, default=None, help="fixed binarization threshold (default: Otsu)")
    _add_multiscale_flags(p)
    _add_search_flags(p)
    _add_interest_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def _merge(defaults: dict, file_vals: dict, flag_vals: dict, section: str) -> dict:
    merged = dict(defaults)
    unknown = set(file_vals) - set(defaults)
    if unknown:
        raise ValueError(f"unknown {section} config keys: {sorted(unknown)}")
    merged.update({k: v for k, v in file_vals.items() if v is not None})
    merged.update({k: v for k, v in flag_vals.items() if v is not None})
    return merged


def parse_config(args: argparse.Namespace) -> PipelineConfig:
    """Build a PipelineConfig: flags override config-file values override
    defaults. The config file uses the same schema as report.json's
    "params" block."""
    file_cfg: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise ValueError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {args.config} is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")

    top_defaults = {
        "moving_path": None,
        "reference_path": None,
        "out_dir": "out",
        "crop": None,
        "perspective": "painter",
        "threshold": None,
        "multiscale": {},
        "search": {},
        "interest": {},
    }
    top = _merge(
        top_defaults,
        file_cfg,
        {
            "moving_path": args.moving,
            "reference_path": args.reference,
            "out_dir": args.out_dir,
            "crop": tuple(args.crop) if args.crop else None,
            "perspective": args.perspective,
            "threshold": args.threshold,
        },
        "top-level",
    )
    if not top["moving_path"] or not top["reference_path"]:
        raise ValueError("two image paths are required (positional arguments or config file)")

    ms_defaults = {"scales": [1.5, 1.0, 0.5], "target_long_side": 1000, "nms_stage": "per_scale"}
    ms = _merge(
        ms_defaults,
        file_cfg.get("multiscale", {}) or {},
        {"scales": args.scales, "target_long_side": args.long_side, "nms_stage": args.nms_stage},
        "multiscale",
    )

    se_defaults = {
        "children_per_iter": 8,
        "theta_step": 0.2,
        "log_scale_step": 0.2,
        "translation_step_frac": 0.05,
        "decay": 0.5,
        "min_step_frac": 1e-3,
        "max_iters": 200,
        "bins": 32,
        "pyramid_levels": 3,
        "use_pyramid": True,
        "mask_overlap": False,
        "seed": 0,
    }
    se = _merge(
        se_defaults,
        file_cfg.get("search", {}) or {},
        {
            "children_per_iter": args.children,
            "theta_step": args.theta_step,
            "log_scale_step": args.scale_step,
            "translation_step_frac": args.trans_step_frac,
            "decay": args.decay,
            "min_step_frac": args.min_step_frac,
            "max_iters": args.max_iters,
            "bins": args.bins,
            "pyramid_levels": args.pyramid_levels,
            "use_pyramid": False if args.no_pyramid else None,
            "mask_overlap": True if args.mask_overlap else None,
            "seed": args.seed,
        },
        "search",
    )

    ip_defaults = {"a": 100, "p": 70, "c": 0.0023}
    ip = _merge(
        ip_defaults,
        file_cfg.get("interest", {}) or {},
        {"a": args.a, "p": args.p, "c": args.c},
        "interest",
    )

    cfg = PipelineConfig(
        moving_path=top["moving_path"],
        reference_path=top["reference_path"],
        out_dir=top["out_dir"],
        crop=tuple(top["crop"]) if top["crop"] else None,
        perspective=top["perspective"],
        threshold=top["threshold"],
        multiscale=MultiscaleConfig(
            scales=tuple(ms["scales"]),
            target_long_side=ms["target_long_side"],
            nms_stage=ms["nms_stage"],
        ),
        search=SearchConfig(
            children_per_iter=se["children_per_iter"],
            theta_step=se["theta_step"],
            log_scale_step=se["log_scale_step"],
            translation_step_frac=se["translation_step_frac"],
            decay=se["decay"],
            min_step_frac=se["min_step_frac"],
            max_iters=se["max_iters"],
            histogram_bins=se["bins"],
            pyramid_levels=se["pyramid_levels"],
            use_pyramid=se["use_pyramid"],
            mask_overlap=se["mask_overlap"],
            rng_seed=se["seed"],
        ),
        interest=interest.InterestParams(a=ip["a"], p=ip["p"], c=ip["c"]),
    )
    _validate_crop(cfg)
    return cfg


def _validate_crop(cfg: PipelineConfig) -> None:
    if cfg.crop is None:
        return
    moving = raster.load_gray(
        cfg.moving_path if cfg.perspective == "painter" else cfg.reference_path
    )
    h, w = moving.shape
    x0, y0, x1, y1 = cfg.crop
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError(f"crop {cfg.crop} does not lie within the {w}x{h} moving image")


def _multiscale_from_args(args) -> MultiscaleConfig:
    return MultiscaleConfig(
        scales=tuple(args.scales) if args.scales else (1.5, 1.0, 0.5),
        target_long_side=args.long_side if args.long_side else 1000,
        nms_stage=args.nms_stage or "per_scale",
    )


def _search_from_args(args) -> SearchConfig:
    defaults = SearchConfig()
    return SearchConfig(
        children_per_iter=args.children if args.children is not None else defaults.children_per_iter,
        theta_step=args.theta_step if args.theta_step is not None else defaults.theta_step,
        log_scale_step=args.scale_step if args.scale_step is not None else defaults.log_scale_step,
        translation_step_frac=(
            args.trans_step_frac if args.trans_step_frac is not None else defaults.translation_step_frac
        ),
        decay=args.decay if args.decay is not None else defaults.decay,
        min_step_frac=args.min_step_frac if args.min_step_frac is not None else defaults.min_step_frac,
        max_iters=args.max_iters if args.max_iters is not None else defaults.max_iters,
        histogram_bins=args.bins if args.bins is not None else defaults.histogram_bins,
        pyramid_levels=args.pyramid_levels if args.pyramid_levels is not None else defaults.pyramid_levels,
        use_pyramid=not args.no_pyramid,
        mask_overlap=args.mask_overlap,
        rng_seed=args.seed if args.seed is not None else defaults.rng_seed,
    )


def cmd_edges(args) -> int:
    img = raster.load_gray(args.image)
    em = multiscale_edge_map(img, _multiscale_from_args(args))
    raster.save_gray(em, args.out)
    if args.bin_out:
        raster.save_gray(binarize(em, args.threshold).astype(float), args.bin_out)
    return EXIT_OK


def cmd_register(args) -> int:
    moving = raster.load_gray(args.moving)
    if args.crop:
        moving = raster.crop(moving, *args.crop)
    reference = raster.load_gray(args.reference)
    result = registration.best_first_register(moving, reference, _search_from_args(args))
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_warp(args) -> int:
    moving = raster.load_gray(args.moving)
    if args.crop:
        moving = raster.crop(moving, *args.crop)
    with open(args.transform, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "registration" in doc:
        doc = doc["registration"]
    t = registration.transform_from_dict(doc)
    if args.like:
        h, w = raster.load_gray(args.like).shape
    elif args.width and args.height:
        w, h = args.width, args.height
    else:
        raise ValueError("warp needs --like or both --width and --height")
    raster.save_gray(registration.apply_transform(moving, t, w, h), args.out)
    return EXIT_OK


def cmd_diff(args) -> int:
    m = load_binary_mask(args.moving_edges)
    r = load_binary_mask(args.reference_edges)
    diff = diffmap.classify_difference(m, r)
    if args.overlay_out:
        raster.save_rgb(
            diffmap.render_overlay(diff, diffmap.palette_for_perspective(args.perspective)),
            args.overlay_out,
        )
    if args.counts_out:
        with open(args.counts_out, "w", encoding="utf-8") as fh:
            json.dump(diffmap.class_counts(diff), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.residual_out:
        painting_only = (
            diffmap.DiffClass.REFERENCE_ONLY
            if args.perspective == "painter"
            else diffmap.DiffClass.MOVING_ONLY
        )
        raster.save_gray(
            diffmap.residual_mask(diff, painting_only).astype(float), args.residual_out
        )
    return EXIT_OK


def cmd_centres(args) -> int:
    mask = load_binary_mask(args.mask)
    params = interest.InterestParams(
        a=args.a if args.a is not None else 100,
        p=args.p if args.p is not None else 70,
        c=args.c if args.c is not None else 0.0023,
    )
    boxes = interest.centres_of_interest(mask, params)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump([b.to_dict() for b in boxes], fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.image and args.annotated_out:
        img = raster.load_gray(args.image)
        th, tw = mask.shape
        annotated = interest.draw_boxes(
            raster.gray_to_rgb(raster.resize_bilinear(img, tw, th)), boxes
        )
        raster.save_rgb(annotated, args.annotated_out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = parse_config(args)
    run_pipeline(cfg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateImageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
