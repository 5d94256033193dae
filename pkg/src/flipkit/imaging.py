"""Image decoding, grayscale conversion, resizing and grid patching.

Gray images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``
with intensities nominally in ``[0, 255]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageLoadError, InvalidInputError

# skimage.color.rgb2gray luma weights
GRAY_WEIGHTS = np.array([0.2125, 0.7154, 0.0721])

SUPPORTED_FORMATS = {"PNG", "JPEG", "TIFF", "BMP"}


def as_gray(img) -> np.ndarray:
    """Validate ``img`` as a gray image and return it as a float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"gray image must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("gray image contains NaN or infinite values")
    return arr


def to_grayscale(image) -> np.ndarray:
    """Convert an ``(H, W)``, ``(H, W, 1)`` or ``(H, W, 3)`` raster to gray.

    Single-channel input passes through unchanged (as float64). RGB input is
    combined with the 0.2125/0.7154/0.0721 luma weights.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return as_gray(arr)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidInputError(
            f"expected 1 or 3 channels, got array of shape {arr.shape}")
    if arr.shape[2] == 1:
        return as_gray(arr[:, :, 0])
    return as_gray(arr @ GRAY_WEIGHTS)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def scaled_shape(shape, scale: float) -> tuple[int, int]:
    """Output ``(height, width)`` of :func:`resize_bilinear` at ``scale``."""
    h, w = shape
    return _round_half_up(scale * h), _round_half_up(scale * w)


def _axis_weights(n_in: int, n_out: int):
    # half-pixel centers: src = (dst + 0.5) * n_in / n_out - 0.5, clamped to the border
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img, scale: float) -> np.ndarray:
    """Resize a gray image by ``scale`` in (0, 1] with bilinear interpolation.

    Output dimensions are ``round(scale * dim)``. ``scale == 1`` returns an
    exact copy.
    """
    img = as_gray(img)
    if not 0.0 < scale <= 1.0:
        raise InvalidInputError(f"scale must lie in (0, 1], got {scale}")
    if scale == 1.0:
        return img.copy()
    out_h, out_w = scaled_shape(img.shape, scale)
    if out_h < 1 or out_w < 1:
        raise InvalidInputError(
            f"scale {scale} collapses a {img.shape[0]}x{img.shape[1]} image to {out_h}x{out_w}")

    r0, r1, fr = _axis_weights(img.shape[0], out_h)
    c0, c1, fc = _axis_weights(img.shape[1], out_w)
    # a + f * (b - a) keeps constant regions exactly constant
    top = img[r0][:, c0] + fc * (img[r0][:, c1] - img[r0][:, c0])
    bottom = img[r1][:, c0] + fc * (img[r1][:, c1] - img[r1][:, c0])
    out = top + fr[:, None] * (bottom - top)
    # rounding can step one ulp past the input range
    return np.clip(out, img.min(), img.max())


@dataclass(frozen=True)
class PatchSpec:
    patch_size: int
    stride: int | None = None

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.patch_size)
        if self.patch_size < 1:
            raise InvalidInputError(f"patch_size must be >= 1, got {self.patch_size}")
        if not 1 <= self.stride <= self.patch_size:
            raise InvalidInputError(
                f"stride must lie in [1, patch_size={self.patch_size}], got {self.stride}")

    @classmethod
    def from_overlap(cls, patch_size: int, overlap_percent: float) -> "PatchSpec":
        """Build a spec from an overlap percentage in [0, 100)."""
        if not 0.0 <= overlap_percent < 100.0:
            raise InvalidInputError(f"overlap must lie in [0, 100), got {overlap_percent}")
        stride = max(1, _round_half_up(patch_size * (1.0 - overlap_percent / 100.0)))
        return cls(patch_size, stride)


@dataclass(frozen=True, eq=False)
class Patch:
    image: np.ndarray
    source_id: str
    row: int
    col: int


def grid_positions(height: int, width: int, size: int, stride: int):
    """Top-left anchors of every full ``size`` x ``size`` window, row-major."""
    if height < size or width < size:
        return []
    rows = range(0, height - size + 1, stride)
    cols = range(0, width - size + 1, stride)
    return [(r, c) for r in rows for c in cols]


def grid_patches(img, spec: PatchSpec, source_id: str = "") -> list[Patch]:
    """Cut ``img`` into a regular grid of patches.

    Partial patches along the right and bottom edges are dropped, so an image
    smaller than the patch size yields an empty list.
    """
    img = as_gray(img)
    size = spec.patch_size
    return [
        Patch(img[r:r + size, c:c + size].copy(), source_id, r, c)
        for r, c in grid_positions(img.shape[0], img.shape[1], size, spec.stride)
    ]


def load_image(path) -> np.ndarray:
    """Decode a PNG/JPEG/TIFF/BMP file into a gray image.

    8-bit gray files keep their values exactly; color files go through
    :func:`to_grayscale`.

    Raises:
        ImageLoadError: the file is missing, truncated or not a supported format.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in SUPPORTED_FORMATS:
                raise ImageLoadError(path, f"unsupported format {im.format}")
            im.load()
            if im.mode in ("L", "I", "F") or im.mode.startswith("I;"):
                arr = np.asarray(im, dtype=np.float64)
            elif im.mode in ("1", "LA"):
                arr = np.asarray(im.convert("L"), dtype=np.float64)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except ImageLoadError:
        raise
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as exc:
        raise ImageLoadError(path, exc) from exc
    return to_grayscale(arr)


def save_png(img, path) -> None:
    """Write a gray image as an 8-bit PNG (values rounded and clipped to [0, 255])."""
    arr = np.clip(np.rint(as_gray(img)), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")
