"""FLIP histograms and their multi-resolution concatenation (mFLIP)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError
from .imaging import as_gray, resize_bilinear, scaled_shape
from .radon_local import bin_masks

DEFAULT_SCALES = (1.0, 0.75, 0.5, 0.25)


@dataclass(frozen=True)
class FlipConfig:
    """Descriptor parameters.

    ``L`` is the histogram parameter: values are rescaled into ``0 .. L-1``
    and bin 0 is discarded, so a histogram has ``L - 1`` bins.
    """

    w: int = 3
    stride: int = 3
    L: int = 128
    n_p: int = 4

    def __post_init__(self):
        if self.w < 3 or self.w % 2 == 0:
            raise ConfigError(f"window size w must be odd and >= 3, got {self.w}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.L < 2:
            raise ConfigError(f"L must be >= 2, got {self.L}")
        if self.n_p < 2:
            raise ConfigError(f"n_p must be >= 2, got {self.n_p}")

    @property
    def n_bins(self) -> int:
        return self.L - 1

    @property
    def values_per_window(self) -> int:
        return self.n_p * self.w


def adjacent_intersections(projections) -> np.ndarray:
    """Elementwise minima of cyclically adjacent projections, concatenated.

    ``projections`` has shape ``(n_p, w)`` (or ``(..., n_p, w)`` for a batch).
    Block ``k`` of the output is ``min(p[k], p[(k+1) % n_p])``.
    """
    ps = np.asarray(projections, dtype=np.float64)
    inter = np.minimum(ps, np.roll(ps, -1, axis=-2))
    return inter.reshape(*ps.shape[:-2], ps.shape[-2] * ps.shape[-1])


def collect_intersections(img, cfg: FlipConfig = FlipConfig()) -> np.ndarray:
    """Intersection matrix of an image: one row of ``n_p * w`` values per window.

    Windows are anchored top-left and swept row-major with step ``cfg.stride``;
    windows that would cross the right or bottom edge are skipped.
    """
    img = as_gray(img)
    w = cfg.w
    if img.shape[0] < w or img.shape[1] < w:
        return np.empty((0, cfg.values_per_window))

    windows = sliding_window_view(img, (w, w))[::cfg.stride, ::cfg.stride]
    flat = windows.reshape(-1, w * w)
    proj = np.empty((flat.shape[0], cfg.n_p, w))
    for k, masks in enumerate(bin_masks(w, cfg.n_p)):
        for b, idx in enumerate(masks):
            proj[:, k, b] = flat[:, idx].sum(axis=1)
    return adjacent_intersections(proj)


def rescale_global(F, L: int):
    """Map every entry of ``F`` to ``ceil((L-1) * (v - p_min) / (p_max - p_min))``.

    Returns ``(levels, p_min, p_max, degenerate)``. ``levels`` is an integer
    array shaped like ``F``. A constant or empty ``F`` is degenerate and maps
    to all zeros.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.size == 0:
        return np.zeros(F.shape, dtype=np.int64), 0.0, 0.0, True
    p_min, p_max = float(F.min()), float(F.max())
    if p_max == p_min:
        return np.zeros(F.shape, dtype=np.int64), p_min, p_max, True
    # dividing first keeps v == p_max at exactly L-1
    frac = (F - p_min) / (p_max - p_min)
    levels = np.ceil((L - 1) * frac).astype(np.int64)
    return levels, p_min, p_max, False


@dataclass(frozen=True, eq=False)
class FlipHistogram:
    counts: np.ndarray
    dropped_bin0: int
    config: FlipConfig
    degenerate: bool
    n_windows: int
    p_min: float = 0.0
    p_max: float = 0.0

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.dropped_bin0

    def normalized(self) -> np.ndarray:
        s = self.counts.sum()
        if s == 0:
            return np.zeros(len(self.counts))
        return self.counts / s

    def __eq__(self, other):
        if not isinstance(other, FlipHistogram):
            return NotImplemented
        return (self.config == other.config
                and self.dropped_bin0 == other.dropped_bin0
                and self.degenerate == other.degenerate
                and self.n_windows == other.n_windows
                and np.array_equal(self.counts, other.counts))

    __hash__ = None


def histogram_from_levels(levels, cfg: FlipConfig, n_windows: int, degenerate: bool,
                          p_min=0.0, p_max=0.0) -> FlipHistogram:
    full = np.bincount(np.asarray(levels, dtype=np.int64).ravel(), minlength=cfg.L)
    return FlipHistogram(
        counts=full[1:].astype(np.int64),
        dropped_bin0=int(full[0]),
        config=cfg,
        degenerate=degenerate,
        n_windows=n_windows,
        p_min=p_min,
        p_max=p_max,
    )


def flip_histogram(img, cfg: FlipConfig = FlipConfig()) -> FlipHistogram:
    """Compute the FLIP histogram of a gray image.

    Rescaled zeros go to ``dropped_bin0`` rather than the histogram, which
    holds the counts of levels ``1 .. L-1``. Constant images, and images too
    small for a single window, give an all-zero degenerate histogram.
    """
    F = collect_intersections(img, cfg)
    levels, p_min, p_max, degenerate = rescale_global(F, cfg.L)
    return histogram_from_levels(levels, cfg, F.shape[0], degenerate, p_min, p_max)


@dataclass(frozen=True, eq=False)
class MflipDescriptor:
    scales: tuple
    histograms: tuple
    flat: np.ndarray = field(repr=False)

    @property
    def config(self) -> FlipConfig:
        return self.histograms[0].config

    @property
    def segments(self) -> list[np.ndarray]:
        n = self.config.n_bins
        return [self.flat[i * n:(i + 1) * n] for i in range(len(self.scales))]

    @property
    def degenerate(self) -> tuple[bool, ...]:
        return tuple(h.degenerate for h in self.histograms)


def check_scales(scales) -> tuple[float, ...]:
    """Validate scale ratios and return them sorted in descending order."""
    scales = tuple(sorted((float(s) for s in scales), reverse=True))
    if not scales:
        raise ConfigError("at least one scale is required")
    for s in scales:
        if not 0.0 < s <= 1.0:
            raise ConfigError(f"scale {s} is outside (0, 1]")
    if len(set(scales)) != len(scales):
        raise ConfigError(f"duplicate scales in {scales}")
    return scales


def mflip(img, scales=DEFAULT_SCALES, cfg: FlipConfig = FlipConfig()) -> MflipDescriptor:
    """Multi-resolution FLIP descriptor.

    The image is resized to every scale (largest first), a FLIP histogram is
    computed at each, L1-normalized, and the segments are concatenated. With
    the default four scales and ``L=128`` the flat vector has 508 entries.

    Raises:
        ConfigError: some scale shrinks the image below the window size.
    """
    img = as_gray(img)
    scales = check_scales(scales)
    for s in scales:
        h, w = scaled_shape(img.shape, s)
        if h < cfg.w or w < cfg.w:
            raise ConfigError(
                f"scale {s} reduces a {img.shape[0]}x{img.shape[1]} image to {h}x{w}, "
                f"smaller than the {cfg.w}x{cfg.w} window")
    hists = tuple(flip_histogram(resize_bilinear(img, s), cfg) for s in scales)
    flat = np.concatenate([h.normalized() for h in hists])
    return MflipDescriptor(scales=scales, histograms=hists, flat=flat)
