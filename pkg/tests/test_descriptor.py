import numpy as np
import pytest

from flipkit.descriptor import (FlipConfig, adjacent_intersections, collect_intersections,
                                flip_histogram, mflip, rescale_global)
from flipkit.errors import ConfigError
from flipkit.radon_local import project_all

rng = np.random.default_rng(12345)


def test_adjacent_intersections_example():
    ps = [[3, 3, 3], [1, 1, 1], [3, 3, 3], [0, 3, 0]]
    assert np.array_equal(adjacent_intersections(ps), [1, 1, 1, 1, 1, 1, 0, 3, 0, 0, 3, 0])


def test_adjacent_intersections_identical_projections():
    p = [2.0, 5.0, 7.0]
    assert np.array_equal(adjacent_intersections([p] * 4), p * 4)


def test_constant_window_intersections():
    v = adjacent_intersections(project_all(np.full((3, 3), 7.0)))
    assert v.shape == (12,) and np.all(v == 21)


def test_collect_intersection_rows():
    assert collect_intersections(np.zeros((3, 3))).shape == (1, 12)
    assert collect_intersections(np.zeros((9, 9))).shape == (9, 12)
    assert collect_intersections(np.zeros((8, 8))).shape == (4, 12)
    assert collect_intersections(np.zeros((2, 9))).shape == (0, 12)
    assert collect_intersections(np.zeros((7, 7)), FlipConfig(stride=1)).shape == (25, 12)


def test_collect_matches_per_window_projection():
    img = rng.integers(0, 256, (11, 14)).astype(float)
    cfg = FlipConfig(w=5, stride=2, n_p=8)
    F = collect_intersections(img, cfg)
    anchors = [(r, c) for r in range(0, 7, 2) for c in range(0, 10, 2)]
    assert F.shape == (len(anchors), 40)
    for row, (r, c) in zip(F, anchors):
        assert np.array_equal(row, adjacent_intersections(project_all(img[r:r + 5, c:c + 5], 8)))


def test_intersections_bounded_by_parents():
    img = rng.integers(0, 256, (30, 30)).astype(float)
    cfg = FlipConfig(stride=1)
    F = collect_intersections(img, cfg).reshape(-1, 4, 3)
    r, c = 4, 7
    ps = project_all(img[r:r + 3, c:c + 3])
    row = F[r * 28 + c]
    for k in range(4):
        assert np.all(row[k] <= ps[k]) and np.all(row[k] <= ps[(k + 1) % 4])


def test_rescale_examples():
    levels, lo, hi, deg = rescale_global(np.array([[0.0, 5.0, 10.0]]), 128)
    assert levels.tolist() == [[0, 64, 127]] and (lo, hi, deg) == (0.0, 10.0, False)
    levels, *_, deg = rescale_global(np.full((3, 4), 2.5), 128)
    assert deg and not levels.any()
    levels, *_, deg = rescale_global(np.empty((0, 12)), 128)
    assert deg and levels.shape == (0, 12)


def test_rescale_max_hits_top_level():
    # values whose (L-1)*v/v would overshoot if multiplied first
    F = rng.uniform(0, 1e3, size=5000)
    levels, *_ = rescale_global(F, 512)
    assert levels.max() == 511 and levels.min() == 0


def test_constant_image_degenerate():
    h = flip_histogram(np.full((20, 20), 99.0))
    assert h.degenerate and not h.counts.any()
    assert h.dropped_bin0 == 12 * 36 and len(h.counts) == 127


def test_single_window_total():
    h = flip_histogram(rng.integers(0, 256, (3, 3)))
    assert h.total == 12 and h.n_windows == 1


def test_too_small_image_empty_histogram():
    h = flip_histogram(np.ones((2, 10)))
    assert h.degenerate and h.n_windows == 0 and h.total == 0


def test_flip_config_validation():
    for kwargs in ({"w": 4}, {"w": 1}, {"stride": 0}, {"L": 1}, {"n_p": 1}):
        with pytest.raises(ConfigError):
            FlipConfig(**kwargs)
    assert FlipConfig().n_bins == 127


def test_mflip_default_length_and_normalization():
    img = rng.integers(0, 256, (40, 36)).astype(float)
    d = mflip(img)
    assert d.flat.shape == (508,)
    assert d.scales == (1.0, 0.75, 0.5, 0.25)
    for seg in d.segments:
        assert abs(seg.sum() - 1.0) < 1e-9


def test_mflip_single_scale_equals_normalized_flip():
    img = rng.integers(0, 256, (25, 25)).astype(float)
    h = flip_histogram(img)
    assert np.array_equal(mflip(img, [1.0]).flat, h.counts / h.counts.sum())


def test_mflip_sorts_scales_descending():
    img = rng.integers(0, 256, (40, 40)).astype(float)
    a = mflip(img, [0.25, 1.0, 0.5])
    b = mflip(img, [1.0, 0.5, 0.25])
    assert a.scales == (1.0, 0.5, 0.25)
    assert np.array_equal(a.flat, b.flat)


def test_mflip_segment_matches_resized_flip():
    from flipkit.imaging import resize_bilinear
    img = rng.integers(0, 256, (40, 40)).astype(float)
    d = mflip(img)
    h = flip_histogram(resize_bilinear(img, 0.5))
    assert np.array_equal(d.segments[2], h.normalized())
    assert d.histograms[2] == h


def test_mflip_too_small_names_scale():
    with pytest.raises(ConfigError, match="0.25"):
        mflip(np.zeros((8, 8)))


def test_mflip_degenerate_segment_all_zero():
    d = mflip(np.full((16, 16), 3.0))
    assert d.degenerate == (True,) * 4
    assert not d.flat.any()


def test_mflip_other_L():
    d = mflip(rng.integers(0, 256, (24, 24)), cfg=FlipConfig(L=512))
    assert d.flat.shape == (4 * 511,)


def test_flip_histogram_is_order_independent():
    # splitting the image into row blocks and merging min/max gives the same result
    img = rng.integers(0, 256, (30, 30)).astype(float)
    F = collect_intersections(img)
    top, bottom = collect_intersections(img[:15]), collect_intersections(img[15:])
    merged = np.vstack([bottom, top])
    assert F.min() == merged.min() and F.max() == merged.max()
    a, *_ = rescale_global(F, 128)
    b, *_ = rescale_global(merged, 128)
    assert np.array_equal(np.bincount(a.ravel(), minlength=128),
                          np.bincount(b.ravel(), minlength=128))
