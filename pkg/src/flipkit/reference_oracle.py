"""Naive FLIP implementation used to cross-check :mod:`flipkit.descriptor`.

Everything here is explicit Python loops over pixels and windows. It is slow
on purpose and shares no intermediate arrays with the optimized pipeline.
"""
from __future__ import annotations

import math

import numpy as np

from .descriptor import FlipConfig, FlipHistogram


def _round_half_away(u: float) -> int:
    # tolerance matches the float noise of cos/sin at multiples of 45 degrees
    a = abs(u)
    n = math.floor(a + 0.5 + 1e-9)
    return n if u >= 0 else -n


def pixel_bin(r: int, c: int, w: int, angle_deg: float) -> int:
    """Bin receiving pixel (r, c) of a w x w window at the given angle."""
    half = (w - 1) / 2
    x = c - half
    y = r - half
    th = math.radians(angle_deg)
    t = x * math.cos(th) + y * math.sin(th)
    t_max = half * (abs(math.cos(th)) + abs(math.sin(th)))
    return _round_half_away(t * (w - 1) / (2 * t_max)) + int(half)


def bin_table(w: int, n_p: int):
    """``table[k][r][c]``: bin of pixel (r, c) at the k-th angle."""
    return [[[pixel_bin(r, c, w, k * 180.0 / n_p) for c in range(w)] for r in range(w)]
            for k in range(n_p)]


def window_projections(img, top: int, left: int, w: int, table):
    """List of projections (each a list of w sums) for one window."""
    projections = []
    for angle_bins in table:
        bins = [0.0] * w
        for r in range(w):
            for c in range(w):
                bins[angle_bins[r][c]] += img[top + r][left + c]
        projections.append(bins)
    return projections


def brute_force_flip(img, cfg: FlipConfig = FlipConfig()) -> FlipHistogram:
    """FLIP histogram computed window by window, pixel by pixel."""
    img = np.asarray(img, dtype=np.float64).tolist()
    height = len(img)
    width = len(img[0]) if height else 0
    w, n_p, L = cfg.w, cfg.n_p, cfg.L

    table = bin_table(w, n_p)
    rows = []
    top = 0
    while top + w <= height:
        left = 0
        while left + w <= width:
            ps = window_projections(img, top, left, w, table)
            row = []
            for k in range(n_p):
                nxt = ps[(k + 1) % n_p]
                row.extend(min(ps[k][b], nxt[b]) for b in range(w))
            rows.append(row)
            left += cfg.stride
        top += cfg.stride

    counts = [0] * L
    p_min = p_max = 0.0
    degenerate = True
    if rows:
        p_min = min(min(row) for row in rows)
        p_max = max(max(row) for row in rows)
        degenerate = p_max == p_min
        for row in rows:
            for v in row:
                level = 0 if degenerate else math.ceil((L - 1) * ((v - p_min) / (p_max - p_min)))
                counts[level] += 1

    return FlipHistogram(
        counts=np.array(counts[1:], dtype=np.int64),
        dropped_bin0=counts[0],
        config=cfg,
        degenerate=degenerate,
        n_windows=len(rows),
        p_min=p_min,
        p_max=p_max,
    )
