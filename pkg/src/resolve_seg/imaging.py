"""Grayscale rasters, Burt pyramids and mask upsampling.

Images are plain 2-D ``float64`` arrays with intensities in ``[0, 255]``;
masks are 2-D ``bool`` arrays (``True`` = object).  Rows are ``y``, columns
are ``x``.  Intensities stay real-valued through the pyramid and are only
quantized when written to disk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

MAX_LEVELS = 8


class ImagingError(ValueError):
    """Base class for raster validation problems."""


class DimensionTooSmallError(ImagingError):
    pass


class TooManyLevelsError(ImagingError):
    pass


def as_gray(img) -> np.ndarray:
    """Validate and return ``img`` as a float64 gray image."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImagingError(f"expected a non-empty 2-D raster, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ImagingError("image contains non-finite intensities")
    if arr.min() < 0.0 or arr.max() > 255.0:
        raise ImagingError("intensities must lie in [0, 255]")
    return arr


def as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ImagingError(f"expected a 2-D mask, got shape {arr.shape}")
    return arr.astype(bool) if arr.dtype != bool else arr


def burt_kernel(a: float = 0.4) -> np.ndarray:
    """Five-tap generating kernel ``[1/4 - a/2, 1/4, a, 1/4, 1/4 - a/2]``."""
    w = np.array([0.25 - a / 2.0, 0.25, a, 0.25, 0.25 - a / 2.0])
    # 2*(1/4 - a/2) + 2*(1/4) + a == 1 identically
    assert abs(w.sum() - 1.0) < 1e-15, w
    return w


def reduce(img, a: float = 0.4) -> np.ndarray:
    """Smooth with the separable Burt kernel and keep even rows/columns.

    Borders are mirrored without repeating the edge sample.  The output has
    shape ``(ceil(h/2), ceil(w/2))`` and pixel ``(y, x)`` is the filtered value
    at source ``(2y, 2x)``.
    """
    arr = as_gray(img)
    h, w = arr.shape
    if h < 2 or w < 2:
        raise DimensionTooSmallError(f"reduce needs at least 2x2, got {w}x{h}")
    k = burt_kernel(a)
    smooth = ndimage.convolve1d(arr, k, axis=0, mode="mirror")
    smooth = ndimage.convolve1d(smooth, k, axis=1, mode="mirror")
    out = smooth[::2, ::2]
    # rounding can push a hair outside the valid range
    return np.clip(out, 0.0, 255.0)


def level_shapes(shape: Tuple[int, int], r: int) -> list:
    """Shapes ``(h, w)`` of each pyramid level under ceil-halving."""
    shapes = [tuple(shape)]
    for _ in range(1, r):
        h, w = shapes[-1]
        shapes.append(((h + 1) // 2, (w + 1) // 2))
    return shapes


@dataclass(frozen=True)
class Pyramid:
    levels: Tuple[np.ndarray, ...]

    @property
    def r(self) -> int:
        return len(self.levels)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.levels[0].shape

    def __getitem__(self, i: int) -> np.ndarray:
        return self.levels[i]

    def __len__(self) -> int:
        return len(self.levels)


def build_pyramid(img, r: int, a: float = 0.4) -> Pyramid:
    """Level 0 is ``img``; level ``i`` is ``reduce`` applied ``i`` times."""
    if not 1 <= r <= MAX_LEVELS:
        raise TooManyLevelsError(f"r must be in [1, {MAX_LEVELS}], got {r}")
    arr = as_gray(img)
    for i, (h, w) in enumerate(level_shapes(arr.shape, r)):
        if h < 2 or w < 2:
            raise TooManyLevelsError(
                f"level {i} of a {arr.shape[1]}x{arr.shape[0]} image would be {w}x{h}"
            )
    levels = [arr]
    for _ in range(1, r):
        levels.append(reduce(levels[-1], a))
    for lv in levels:
        lv.setflags(write=False)
    return Pyramid(tuple(levels))


def upsample_mask(mask, factor: int, shape: Tuple[int, int] | None = None) -> np.ndarray:
    """Nearest-neighbour replication by ``factor``, cropped (or edge-padded) to ``shape``."""
    m = as_mask(mask)
    if factor < 1 or factor & (factor - 1):
        raise ImagingError(f"factor must be a power of two, got {factor}")
    up = np.repeat(np.repeat(m, factor, axis=0), factor, axis=1)
    if shape is None:
        return up
    h, w = shape
    up = up[:h, :w]
    if up.shape != (h, w):
        up = np.pad(up, ((0, h - up.shape[0]), (0, w - up.shape[1])), mode="edge")
    return up
