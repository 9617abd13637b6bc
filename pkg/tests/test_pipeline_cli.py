import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from paintdiff import raster
from paintdiff import registration as reg
from paintdiff.cli import build_parser, main, parse_config
from paintdiff.pipeline import ARTIFACTS, PipelineConfig, run_pipeline
from synth import smooth_blobs


def _parse(argv):
    return parse_config(build_parser().parse_args(argv))


def test_parse_config_defaults():
    cfg = _parse(["pipeline", "photo.png", "painting.png"])
    assert cfg.moving_path == "photo.png"
    assert cfg.reference_path == "painting.png"
    assert cfg.perspective == "painter"
    assert cfg.threshold is None
    assert cfg.multiscale.scales == (1.5, 1.0, 0.5)
    assert cfg.multiscale.target_long_side == 1000
    assert cfg.interest.a == 100 and cfg.interest.p == 70 and cfg.interest.c == 0.0023
    assert cfg.search.histogram_bins == 32
    assert cfg.search.children_per_iter == 8
    assert cfg.search.rng_seed == 0


def test_parse_config_flag_override():
    cfg = _parse(["pipeline", "m.png", "r.png", "--a", "200"])
    assert cfg.interest.a == 200
    assert cfg.interest.p == 70 and cfg.interest.c == 0.0023


def test_parse_config_file_then_flags(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(
        json.dumps(
            {
                "moving_path": "m.png",
                "reference_path": "r.png",
                "interest": {"a": 150},
                "search": {"bins": 16, "seed": 7},
            }
        )
    )
    cfg = _parse(["pipeline", "--config", str(cfg_file), "--a", "200"])
    assert cfg.interest.a == 200  # flag beats file
    assert cfg.search.histogram_bins == 16  # file beats default
    assert cfg.search.rng_seed == 7
    assert cfg.interest.p == 70  # untouched default


def test_parse_config_unknown_key_rejected(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"moving_path": "m.png", "reference_path": "r.png", "typo": 1}))
    with pytest.raises(ValueError, match="typo"):
        _parse(["pipeline", "--config", str(cfg_file)])


def test_parse_config_requires_two_paths():
    with pytest.raises(ValueError, match="two image paths"):
        _parse(["pipeline", "only_one.png"])


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["pipeline", "m.png", "r.png", "--bogus"])
    assert exc.value.code == 2


def test_crop_outside_image_is_usage_error(tmp_path):
    img = tmp_path / "img.png"
    raster.save_gray(np.random.default_rng(0).random((20, 20)), img)
    code = main(["pipeline", str(img), str(img), "--crop", "0", "0", "40", "10",
                 "-o", str(tmp_path / "out")])
    assert code == 2


def test_missing_input_is_io_error(tmp_path):
    code = main(["pipeline", str(tmp_path / "nope.png"), str(tmp_path / "nope2.png"),
                 "-o", str(tmp_path / "out")])
    assert code == 3


def test_constant_inputs_are_degenerate(tmp_path):
    img = tmp_path / "flat.png"
    raster.save_gray(np.full((24, 24), 0.5), img)
    code = main(["pipeline", str(img), str(img), "-o", str(tmp_path / "out")])
    assert code == 4


@pytest.fixture(scope="module")
def identical_pair_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("identical")
    img = smooth_blobs(96, 96, n_blobs=8, seed=3, margin=18)
    path = d / "img.png"
    raster.save_gray(img, path)
    cfg = PipelineConfig(
        moving_path=str(path),
        reference_path=str(path),
        out_dir=str(d / "out"),
    )
    cfg.multiscale.target_long_side = 128
    cfg.search.pyramid_levels = 2
    report = run_pipeline(cfg)
    return d, report


def test_identical_inputs_have_no_exclusive_edges(identical_pair_run):
    _, report = identical_pair_run
    assert report["registration"]["theta_rad"] == 0.0
    assert report["registration"]["scale"] == 1.0
    assert report["registration"]["tx_px"] == 0.0 and report["registration"]["ty_px"] == 0.0
    assert not report["registration"]["reflect"]
    assert report["diff_counts"]["moving_only"] == 0
    assert report["diff_counts"]["reference_only"] == 0
    assert report["boxes"] == []


def test_artifacts_written(identical_pair_run):
    d, report = identical_pair_run
    out = d / "out"
    for name in report["artifact_paths"].values():
        assert (out / name).exists()
    assert (out / ARTIFACTS["report"]).exists()


def _bright_spot(img, rw, rh, pad=5):
    best = None
    h, w = img.shape
    for y in range(pad, h - rh - pad, 2):
        for x in range(pad, w - rw - pad, 2):
            m = img[y - pad : y + rh + pad, x - pad : x + rw + pad].min()
            if best is None or m > best[0]:
                best = (m, x, y)
    return best


@pytest.fixture(scope="module")
def one_stroke_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("stroke")
    w, h = 128, 128
    base = smooth_blobs(w, h, n_blobs=12, seed=2, margin=20)
    truth = reg.SimilarityTransform(theta=math.radians(1.5), scale=1.02, tx=3, ty=-2)
    painting = reg.apply_transform(base, truth, w, h)
    brightness, sx, sy = _bright_spot(painting, 40, 12)
    assert brightness > 0.5, "fixture needs a bright background for the stroke"
    painting[sy : sy + 12, sx : sx + 40] = 0.0
    raster.save_gray(base, d / "photo.png")
    raster.save_gray(np.clip(painting, 0, 1), d / "painting.png")
    cfg = PipelineConfig(
        moving_path=str(d / "photo.png"),
        reference_path=str(d / "painting.png"),
        out_dir=str(d / "out"),
        threshold=0.5,
    )
    cfg.multiscale.target_long_side = 500
    report = run_pipeline(cfg)
    return d, report, (sx, sy, sx + 40, sy + 12), 500 / w


def test_one_stroke_yields_one_covering_box(one_stroke_run):
    _, report, stroke, f = one_stroke_run
    assert len(report["boxes"]) == 1
    box = report["boxes"][0]
    x0, y0, x1, y1 = (round(v * f) for v in stroke)
    assert box["x0"] <= x0 and box["y0"] <= y0
    assert box["x1"] >= x1 and box["y1"] >= y1


def test_report_parameters_reproduce_config(one_stroke_run):
    d, report, _, _ = one_stroke_run
    cfg_file = d / "from_report.json"
    cfg_file.write_text(json.dumps(report["params"]))
    cfg = _parse(["pipeline", "--config", str(cfg_file)])
    assert cfg.moving_path == str(d / "photo.png")
    assert cfg.threshold == 0.5
    assert cfg.multiscale.target_long_side == 500
    assert cfg.search.rng_seed == 0


def test_stage_reruns_match_pipeline_artifacts(one_stroke_run, tmp_path):
    d, report, _, _ = one_stroke_run
    out = d / "out"
    ms = ["--scales", "1.5", "1.0", "0.5", "--long-side", "500"]

    code = main(["register", str(d / "photo.png"), str(d / "painting.png"),
                 "--out", str(tmp_path / "reg.json")])
    assert code == 0
    assert json.loads((tmp_path / "reg.json").read_text()) == report["registration"]

    code = main(["warp", str(d / "photo.png"), "--transform", str(tmp_path / "reg.json"),
                 "--like", str(d / "painting.png"), "--out", str(tmp_path / "warped.png")])
    assert code == 0
    assert (tmp_path / "warped.png").read_bytes() == (out / "warped.png").read_bytes()

    code = main(["edges", str(out / "warped.png"), "--out", str(tmp_path / "em.png"),
                 "--bin-out", str(tmp_path / "emb.png"), "--threshold", "0.5", *ms])
    assert code == 0
    assert (tmp_path / "em.png").read_bytes() == (out / "edges_moving.png").read_bytes()
    assert (tmp_path / "emb.png").read_bytes() == (out / "edges_moving_binary.png").read_bytes()

    code = main(["edges", str(d / "painting.png"), "--out", str(tmp_path / "er.png"),
                 "--bin-out", str(tmp_path / "erb.png"), "--threshold", "0.5", *ms])
    assert code == 0
    assert (tmp_path / "er.png").read_bytes() == (out / "edges_reference.png").read_bytes()

    code = main(["diff", str(out / "edges_moving_binary.png"),
                 str(out / "edges_reference_binary.png"),
                 "--overlay-out", str(tmp_path / "overlay.png"),
                 "--counts-out", str(tmp_path / "counts.json"),
                 "--residual-out", str(tmp_path / "residual.png")])
    assert code == 0
    assert (tmp_path / "overlay.png").read_bytes() == (out / "overlay.png").read_bytes()
    assert (tmp_path / "residual.png").read_bytes() == (out / "residual.png").read_bytes()
    assert json.loads((tmp_path / "counts.json").read_text()) == report["diff_counts"]

    code = main(["centres", str(out / "residual.png"), "--out", str(tmp_path / "boxes.json")])
    assert code == 0
    assert json.loads((tmp_path / "boxes.json").read_text()) == report["boxes"]


def test_pipeline_viewer_perspective_warps_painting(one_stroke_run):
    d, painter_report, stroke, f = one_stroke_run
    cfg = PipelineConfig(
        moving_path=str(d / "photo.png"),
        reference_path=str(d / "painting.png"),
        out_dir=str(d / "out_viewer"),
        perspective="viewer",
        threshold=0.5,
    )
    cfg.multiscale.target_long_side = 500
    report = run_pipeline(cfg)
    # painting-only edges are now the moving side, and the stroke still
    # yields exactly one box, located where the warp put the stroke
    assert len(report["boxes"]) == 1
    assert report["diff_counts"]["moving_only"] > 0
    t = reg.transform_from_dict(report["registration"])
    cx, cy = (stroke[0] + stroke[2]) / 2, (stroke[1] + stroke[3]) / 2
    center = t.linear() @ (np.array([cx, cy]) - 63.5) + 63.5 + np.array([t.tx, t.ty])
    box = report["boxes"][0]
    assert box["x0"] <= center[0] * f <= box["x1"]
    assert box["y0"] <= center[1] * f <= box["y1"]


def test_viewer_perspective_swaps_roles(tmp_path):
    m = np.zeros((8, 8), bool)
    m[2, 2:6] = True
    r = np.zeros((8, 8), bool)
    r[5, 1:7] = True
    raster.save_gray(m.astype(float), tmp_path / "m.png")
    raster.save_gray(r.astype(float), tmp_path / "r.png")

    for view in ("painter", "viewer"):
        code = main(["diff", str(tmp_path / "m.png"), str(tmp_path / "r.png"),
                     "--overlay-out", str(tmp_path / f"ov_{view}.png"),
                     "--residual-out", str(tmp_path / f"res_{view}.png"),
                     "--perspective", view])
        assert code == 0

    ov_painter = raster.load_image(tmp_path / "ov_painter.png")
    ov_viewer = raster.load_image(tmp_path / "ov_viewer.png")
    # the painting role (green) follows the perspective: reference when the
    # painter view, moving when the viewer view
    green = np.array([0, 160, 0], dtype=np.uint8)
    assert np.array_equal(ov_painter[5, 1], green)
    assert np.array_equal(ov_viewer[2, 2], green)

    res_painter = raster.load_gray(tmp_path / "res_painter.png") > 0.5
    res_viewer = raster.load_gray(tmp_path / "res_viewer.png") > 0.5
    assert np.array_equal(res_painter, r)
    assert np.array_equal(res_viewer, m)


def test_cli_module_entrypoint(tmp_path):
    img = tmp_path / "img.png"
    raster.save_gray(np.random.default_rng(1).random((16, 16)), img)
    proc = subprocess.run(
        [sys.executable, "-m", "paintdiff", "edges", str(img),
         "--out", str(tmp_path / "em.png"), "--long-side", "32"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "em.png").exists()


def test_pipeline_error_names_stage(tmp_path):
    img = tmp_path / "flat.png"
    raster.save_gray(np.full((16, 16), 0.3), img)
    cfg = PipelineConfig(moving_path=str(img), reference_path=str(img), out_dir=str(tmp_path / "o"))
    with pytest.raises(Exception, match=r"\[register\]"):
        run_pipeline(cfg)
