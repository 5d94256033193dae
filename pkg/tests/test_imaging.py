import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from flipkit.errors import ImageLoadError, InvalidInputError
from flipkit.imaging import (PatchSpec, grid_patches, load_image, resize_bilinear, save_png,
                             to_grayscale)


@pytest.mark.parametrize("rgb, gray", [
    ((255, 255, 255), 255.0),
    ((0, 0, 0), 0.0),
    ((255, 0, 0), 54.1875),
])
def test_to_grayscale_examples(rgb, gray):
    out = to_grayscale(np.array([[rgb]], dtype=float))
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(gray, abs=1e-12)


def test_to_grayscale_single_channel_passthrough():
    img = np.arange(12, dtype=float).reshape(3, 4)
    assert np.array_equal(to_grayscale(img), img)
    assert np.array_equal(to_grayscale(img[:, :, None]), img)


@pytest.mark.parametrize("shape", [(2, 2, 2), (2, 2, 4), (2,)])
def test_to_grayscale_rejects_bad_channels(shape):
    with pytest.raises(InvalidInputError):
        to_grayscale(np.zeros(shape))


@given(arrays(np.float64, (5, 5, 3), elements=st.floats(0, 255)))
def test_to_grayscale_is_convex(rgb):
    gray = to_grayscale(rgb)
    assert np.all(gray >= rgb.min(axis=2) - 1e-9)
    assert np.all(gray <= rgb.max(axis=2) + 1e-9)


def test_resize_identity_is_copy():
    img = np.random.default_rng(1).uniform(0, 255, (7, 9))
    out = resize_bilinear(img, 1.0)
    assert np.array_equal(out, img)
    assert out is not img


def test_resize_constant_stays_constant():
    img = np.full((13, 17), 42.7)
    for s in (0.75, 0.5, 0.25, 0.33):
        out = resize_bilinear(img, s)
        assert np.all(out == 42.7)


def test_resize_ramp_golden():
    # sample centers map to source (0.5, 0.5), (0.5, 2.5), (2.5, 0.5), (2.5, 2.5);
    # on the ramp 4r + c each is the mean of a 2x2 block
    ramp = np.arange(16, dtype=float).reshape(4, 4)
    out = resize_bilinear(ramp, 0.5)
    assert np.array_equal(out, [[2.5, 4.5], [10.5, 12.5]])


def test_resize_output_dims():
    img = np.zeros((1000, 1000))
    assert resize_bilinear(img, 0.75).shape == (750, 750)
    assert resize_bilinear(np.zeros((168, 308)), 0.25).shape == (42, 77)
    assert resize_bilinear(np.zeros((5, 5)), 0.5).shape == (3, 3)  # 2.5 rounds half up


def test_resize_rejects_bad_scale():
    with pytest.raises(InvalidInputError):
        resize_bilinear(np.zeros((4, 4)), 1.5)
    with pytest.raises(InvalidInputError):
        resize_bilinear(np.zeros((4, 4)), 0.0)
    with pytest.raises(InvalidInputError):
        resize_bilinear(np.zeros((1, 1)), 0.1)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(2, 20)),
              elements=st.floats(0, 255)),
       st.sampled_from([0.25, 0.5, 0.75, 0.9]))
def test_resize_stays_in_input_range(img, scale):
    if min(round(scale * d + 1e-9) for d in img.shape) < 1:
        return
    out = resize_bilinear(img, scale)
    assert out.min() >= img.min() and out.max() <= img.max()


@pytest.mark.parametrize("size, stride, n", [
    (100, 50, 4),
    (1000, 1000, 1),
    (110, 50, 4),
])
def test_grid_patches_counts(size, stride, n):
    img = np.zeros((size, size))
    spec = PatchSpec(50 if size != 1000 else 1000, stride)
    assert len(grid_patches(img, spec)) == n


def test_grid_patches_positions_and_content():
    img = np.arange(100, dtype=float).reshape(10, 10)
    patches = grid_patches(img, PatchSpec(4, 3), "scan")
    assert [(p.row, p.col) for p in patches] == [(r, c) for r in (0, 3, 6) for c in (0, 3, 6)]
    p = patches[4]
    assert np.array_equal(p.image, img[3:7, 3:7])
    assert p.source_id == "scan"


def test_grid_patches_small_image_empty():
    assert grid_patches(np.zeros((5, 5)), PatchSpec(6)) == []


@given(st.integers(1, 60), st.integers(1, 60), st.integers(1, 20), st.data())
def test_grid_patch_count_formula(H, W, size, data):
    stride = data.draw(st.integers(1, size))
    n = len(grid_patches(np.zeros((H, W)), PatchSpec(size, stride)))
    if H < size or W < size:
        assert n == 0
    else:
        assert n == ((W - size) // stride + 1) * ((H - size) // stride + 1)


def test_patch_spec_validation():
    with pytest.raises(InvalidInputError):
        PatchSpec(0)
    with pytest.raises(InvalidInputError):
        PatchSpec(10, 11)
    assert PatchSpec.from_overlap(1000, 0).stride == 1000
    assert PatchSpec.from_overlap(1000, 50).stride == 500
    with pytest.raises(InvalidInputError):
        PatchSpec.from_overlap(1000, 100)


def test_load_white_png(tmp_path):
    path = tmp_path / "white.png"
    Image.new("RGB", (1, 1), (255, 255, 255)).save(path)
    img = load_image(path)
    assert img.shape == (1, 1) and img[0, 0] == pytest.approx(255.0, abs=1e-12)


def test_load_gray_png_exact(tmp_path):
    data = np.random.default_rng(3).integers(0, 256, (6, 5)).astype(np.uint8)
    path = tmp_path / "g.png"
    Image.fromarray(data).save(path)
    assert np.array_equal(load_image(path), data.astype(float))


@pytest.mark.parametrize("fmt, ext", [("JPEG", "jpg"), ("TIFF", "tif"), ("BMP", "bmp")])
def test_load_other_formats(tmp_path, fmt, ext):
    path = tmp_path / f"x.{ext}"
    Image.new("L", (4, 3), 77).save(path, format=fmt)
    img = load_image(path)
    assert img.shape == (3, 4)
    assert np.allclose(img, 77, atol=2)


def test_load_truncated_file(tmp_path):
    good = tmp_path / "good.png"
    Image.fromarray(np.random.default_rng(0).integers(0, 256, (64, 64)).astype(np.uint8)).save(good)
    bad = tmp_path / "bad.png"
    bad.write_bytes(good.read_bytes()[:60])
    with pytest.raises(ImageLoadError) as err:
        load_image(bad)
    assert "bad.png" in str(err.value)


def test_load_missing_and_unsupported(tmp_path):
    with pytest.raises(ImageLoadError):
        load_image(tmp_path / "nope.png")
    gif = tmp_path / "x.gif"
    Image.new("L", (2, 2)).save(gif)
    with pytest.raises(ImageLoadError, match="unsupported"):
        load_image(gif)


def test_save_png_roundtrip(tmp_path):
    data = np.random.default_rng(2).integers(0, 256, (5, 7)).astype(float)
    save_png(data, tmp_path / "p.png")
    assert np.array_equal(load_image(tmp_path / "p.png"), data)
