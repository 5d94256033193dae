"""Synthetic texture corpus for desk-scale retrieval checks."""
from __future__ import annotations

import numpy as np

TEXTURE_CLASSES = ("stripes_0", "stripes_45", "stripes_90", "stripes_135", "checker", "noise")


def texture(kind: str, size: int = 96, rng=None, period: float = 8.0,
            noise_sigma: float = 6.0) -> np.ndarray:
    """One ``size x size`` texture sample with random phase and additive Gaussian noise.

    Stripe angles give the direction in which intensity varies, measured
    counter-clockwise from the +x (column) axis with rows growing downward.
    """
    rng = np.random.default_rng(rng)
    r, c = np.mgrid[0:size, 0:size].astype(np.float64)
    if kind.startswith("stripes_"):
        theta = np.deg2rad(float(kind.split("_", 1)[1]))
        u = c * np.cos(theta) - r * np.sin(theta)
        phase = rng.uniform(0, 2 * np.pi)
        img = 128 + 80 * np.sin(2 * np.pi * u / period + phase)
    elif kind == "checker":
        dr, dc = rng.integers(0, int(period), size=2)
        cells = ((r + dr) // period + (c + dc) // period) % 2
        img = 48 + 160 * cells
    elif kind == "noise":
        img = rng.uniform(0, 255, size=(size, size))
    else:
        raise ValueError(f"unknown texture kind {kind!r}")
    img = img + rng.normal(0, noise_sigma, size=img.shape)
    return np.clip(np.rint(img), 0, 255)


def texture_corpus(per_class: int = 40, size: int = 96, seed: int = 0, classes=TEXTURE_CLASSES):
    """List of ``(image, label)`` pairs, ``per_class`` samples per texture class."""
    rng = np.random.default_rng(seed)
    return [(texture(kind, size, rng), kind) for kind in classes for _ in range(per_class)]
