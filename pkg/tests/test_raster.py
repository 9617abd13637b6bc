import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paintdiff import raster


def test_grayscale_white_pixel():
    img = np.full((1, 1, 3), 255, dtype=np.uint8)
    assert raster.to_grayscale(img)[0, 0] == pytest.approx(1.0)


def test_grayscale_pure_red():
    img = np.zeros((2, 2, 3), dtype=np.uint8)
    img[..., 0] = 255
    assert np.allclose(raster.to_grayscale(img), 0.299)


def test_grayscale_equal_channels():
    for g in (0, 17, 128, 255):
        img = np.full((3, 4, 3), g, dtype=np.uint8)
        assert np.allclose(raster.to_grayscale(img), g / 255.0, atol=1e-12)


def test_grayscale_preserves_dims():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (7, 11, 3), dtype=np.uint8)
    assert raster.to_grayscale(img).shape == (7, 11)


def test_resize_identity():
    rng = np.random.default_rng(1)
    img = rng.random((9, 13))
    assert np.array_equal(raster.resize_bilinear(img, 13, 9), img)


def test_resize_constant_any_size():
    img = np.full((5, 7), 0.37)
    for w, h in [(1, 1), (3, 10), (20, 2), (14, 14)]:
        out = raster.resize_bilinear(img, w, h)
        assert out.shape == (h, w)
        assert np.array_equal(out, np.full((h, w), 0.37))


def test_resize_2x2_to_1x1_is_mean():
    img = np.array([[0.1, 0.3], [0.5, 0.9]])
    out = raster.resize_bilinear(img, 1, 1)
    assert out[0, 0] == pytest.approx((0.1 + 0.3 + 0.5 + 0.9) / 4, abs=1e-12)


def test_resize_zero_target_rejected():
    img = np.zeros((4, 4))
    with pytest.raises(ValueError):
        raster.resize_bilinear(img, 0, 4)
    with pytest.raises(ValueError):
        raster.resize_bilinear(img, 4, 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 40))
@settings(max_examples=40, deadline=None)
def test_resize_stays_within_input_range(seed, w, h):
    rng = np.random.default_rng(seed)
    img = rng.random((int(rng.integers(1, 24)), int(rng.integers(1, 24))))
    out = raster.resize_bilinear(img, w, h)
    assert out.min() >= img.min() and out.max() <= img.max()


def test_resize_grayscale_commute():
    rng = np.random.default_rng(2)
    rgb = rng.integers(0, 256, (17, 23, 3), dtype=np.uint8)
    a = raster.resize_bilinear(raster.to_grayscale(rgb), 31, 12)
    per_channel = np.stack(
        [raster.resize_bilinear(rgb[..., k].astype(float), 31, 12) for k in range(3)], axis=-1
    )
    b = (per_channel @ np.asarray(raster.LUMA_WEIGHTS)) / 255.0
    assert np.abs(a - b).max() < 1e-4


def test_resize_round_trip_constant_exact():
    img = np.full((6, 8), 0.123456)
    up = raster.resize_bilinear(img, 16, 12)
    down = raster.resize_bilinear(up, 8, 6)
    assert np.array_equal(down, img)


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    img = rng.random((12, 9))
    path = tmp_path / "img.png"
    raster.save_gray(img, path)
    back = raster.load_gray(path)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    img = rng.random((5, 6))
    path = tmp_path / "img.pgm"
    raster.save_gray(img, path)
    assert path.read_bytes()[:2] == b"P5"
    assert np.abs(raster.load_gray(path) - img).max() <= 0.5 / 255 + 1e-12


def test_rgb_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    img = rng.integers(0, 256, (8, 10, 3), dtype=np.uint8)
    path = tmp_path / "img.png"
    raster.save_rgb(img, path)
    loaded = raster.load_image(path)
    assert np.array_equal(loaded, img)


def test_load_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError, match="no_such"):
        raster.load_image(tmp_path / "no_such.png")


def test_load_garbage_raises_oserror(tmp_path):
    path = tmp_path / "junk.png"
    path.write_bytes(b"not an image at all")
    with pytest.raises(OSError, match="junk.png"):
        raster.load_image(path)


def test_crop_bounds():
    img = np.arange(20.0).reshape(4, 5) / 20.0
    assert np.array_equal(raster.crop(img, 1, 1, 3, 3), img[1:3, 1:3])
    with pytest.raises(ValueError):
        raster.crop(img, 0, 0, 6, 2)
    with pytest.raises(ValueError):
        raster.crop(img, 2, 2, 2, 3)
