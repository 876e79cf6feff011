"""Local binary pattern labelling and regional LBP histograms."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .imaging import DimensionTooSmallError, ImagingError, as_gray

# (dy, dx) of the 8 neighbours, clockwise from top-left; bit k has weight 2**k.
NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))

DEFAULT_GRID = (4, 4)
DEFAULT_BINS = 10


class EmptyRegionError(ImagingError):
    pass


def lbp_label(img) -> np.ndarray:
    """3x3 LBP codes for interior pixels.

    Returns a ``uint8`` raster of shape ``(h - 2, w - 2)``: entry ``(y, x)`` is
    the code of source pixel ``(y + 1, x + 1)``.  A neighbour contributes its
    bit when it is ``>=`` the centre.
    """
    arr = as_gray(img)
    h, w = arr.shape
    if h < 3 or w < 3:
        raise DimensionTooSmallError(f"LBP needs at least 3x3, got {w}x{h}")
    center = arr[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.uint8)
    for k, (dy, dx) in enumerate(NEIGHBOURS):
        nb = arr[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (nb >= center).astype(np.uint8) << k
    return codes


def region_edges(n: int, parts: int) -> np.ndarray:
    """Boundaries splitting ``range(n)`` into ``parts`` near-equal spans."""
    return (np.arange(parts + 1) * n) // parts


def region_histograms(
    img, grid: Tuple[int, int] = DEFAULT_GRID, bins: int = DEFAULT_BINS
) -> np.ndarray:
    """Raw per-region LBP histograms, shape ``(rows * cols, bins)``.

    The grid partitions the whole image; only interior pixels (those with a
    full 3x3 neighbourhood) are counted.
    """
    arr = as_gray(img)
    rows, cols = grid
    if rows < 1 or cols < 1 or bins < 1:
        raise ValueError(f"grid and bins must be positive, got {grid}, {bins}")
    codes = lbp_label(arr)
    h, w = arr.shape
    ye = region_edges(h, rows)
    xe = region_edges(w, cols)
    bin_of = (codes.astype(np.int64) * bins) // 256
    hist = np.zeros((rows * cols, bins), dtype=np.int64)
    for i in range(rows):
        # region rows [ye[i], ye[i+1]) intersected with interior rows [1, h-1)
        y0, y1 = max(ye[i], 1) - 1, min(ye[i + 1], h - 1) - 1
        for j in range(cols):
            x0, x1 = max(xe[j], 1) - 1, min(xe[j + 1], w - 1) - 1
            block = bin_of[y0:y1, x0:x1] if (y1 > y0 and x1 > x0) else bin_of[:0, :0]
            if block.size == 0:
                raise EmptyRegionError(
                    f"region ({i}, {j}) of a {w}x{h} image has no interior pixels"
                )
            hist[i * cols + j] = np.bincount(block.ravel(), minlength=bins)
    return hist


def extract_features(
    img, grid: Tuple[int, int] = DEFAULT_GRID, bins: int = DEFAULT_BINS
) -> np.ndarray:
    """Region-major concatenation of per-region LBP histograms, each scaled
    to sum to one.  Length is ``rows * cols * bins``."""
    hist = region_histograms(img, grid, bins).astype(np.float64)
    hist /= hist.sum(axis=1, keepdims=True)
    return hist.ravel()


def n_features(grid: Tuple[int, int] = DEFAULT_GRID, bins: int = DEFAULT_BINS) -> int:
    return grid[0] * grid[1] * bins
