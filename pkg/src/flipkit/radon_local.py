"""Discrete Radon projections of small square windows.

Each projection of a ``w x w`` window has exactly ``w`` bins. A pixel at
centered coordinates ``x = c - (w-1)/2`` (rightward) and ``y = r - (w-1)/2``
(downward) lands, for angle ``theta``, in bin::

    t     = x cos(theta) + y sin(theta)
    t_max = (w-1)/2 * (|cos(theta)| + |sin(theta)|)
    bin   = round_half_away(t * (w-1) / (2 t_max)) + (w-1)/2

so 0 degrees gives column sums, 90 degrees row sums, and every pixel contributes
its full intensity to exactly one bin.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidInputError

# absorbs trig rounding so exact half-way positions round away from zero
_TIE_EPS = 1e-9


def projection_angles(n_p: int) -> tuple[float, ...]:
    """Equidistant angles ``k * 180 / n_p`` in degrees, ``k = 0 .. n_p-1``."""
    if n_p < 2:
        raise InvalidInputError(f"need at least 2 projections, got {n_p}")
    return tuple(k * 180.0 / n_p for k in range(n_p))


def _check_window_size(w: int) -> None:
    if w < 3 or w % 2 == 0:
        raise InvalidInputError(f"window size must be odd and >= 3, got {w}")


@lru_cache(maxsize=None)
def _bin_map(w: int, angle: float) -> np.ndarray:
    theta = np.deg2rad(angle)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    half = (w - 1) / 2
    y, x = np.mgrid[0:w, 0:w] - half
    t = x * cos_t + y * sin_t
    t_max = half * (abs(cos_t) + abs(sin_t))
    u = t * (w - 1) / (2 * t_max)
    rounded = np.sign(u) * np.floor(np.abs(u) + 0.5 + _TIE_EPS)
    bins = (rounded + half).astype(np.intp)
    bins.setflags(write=False)
    return bins


def bin_map(w: int, angle: float) -> np.ndarray:
    """Return the ``w x w`` array of bin indices for ``angle`` degrees."""
    _check_window_size(w)
    if not 0.0 <= angle < 180.0:
        raise InvalidInputError(f"angle must lie in [0, 180), got {angle}")
    return _bin_map(w, float(angle))


def bin_masks(w: int, n_p: int) -> list[list[np.ndarray]]:
    """Flat pixel indices feeding each bin: ``masks[k][b]`` for angle k, bin b."""
    masks = []
    for angle in projection_angles(n_p):
        flat = bin_map(w, angle).ravel()
        masks.append([np.flatnonzero(flat == b) for b in range(w)])
    return masks


def _as_window(window) -> np.ndarray:
    win = np.asarray(window, dtype=np.float64)
    if win.ndim != 2 or win.shape[0] != win.shape[1]:
        raise InvalidInputError(f"window must be square, got shape {win.shape}")
    _check_window_size(win.shape[0])
    if not np.all(np.isfinite(win)):
        raise InvalidInputError("window contains NaN or infinite values")
    return win


def project_window(window, angle: float) -> np.ndarray:
    """Project a square window at ``angle`` degrees into ``w`` bins."""
    win = _as_window(window)
    bins = bin_map(win.shape[0], angle)
    return np.bincount(bins.ravel(), weights=win.ravel(), minlength=win.shape[0])


def project_all(window, n_p: int = 4) -> np.ndarray:
    """All ``n_p`` equidistant projections of a window, shape ``(n_p, w)``.

    Row ``k`` is the projection at ``k * 180 / n_p`` degrees; the default
    ``n_p=4`` gives 0, 45, 90 and 135 degrees.
    """
    win = _as_window(window)
    return np.stack([project_window(win, a) for a in projection_angles(n_p)])
