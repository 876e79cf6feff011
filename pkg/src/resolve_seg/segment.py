"""Segmentation backends, region-growing refinement and the timed driver.

Two timing modes are supported.  ``"wall"`` measures seconds with
``time.perf_counter``.  ``"cost"`` counts per-pixel update operations, which
is machine independent and therefore reproducible: a Chan-Vese iteration
costs one unit per pixel of the level being evolved, upsampling costs one
unit per level-0 pixel, and each refinement sweep costs one unit per
candidate pixel it tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple

import numpy as np
from scipy import ndimage

from .evaluation import dice
from .imaging import DimensionTooSmallError, ImagingError, Pyramid, as_gray, as_mask, upsample_mask

EIGHT = np.ones((3, 3), dtype=bool)
TIMING_MODES = ("wall", "cost")


class EmptyMaskError(ImagingError):
    pass


class CostCounter:
    """Accumulates deterministic per-pixel operation counts."""

    def __init__(self) -> None:
        self.total = 0

    def add(self, n) -> None:
        self.total += int(n)


class Segmenter(Protocol):
    name: str

    def segment(self, img: np.ndarray, counter: Optional[CostCounter] = None) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# Chan-Vese


@dataclass(frozen=True)
class ChanVeseConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    nu: float = 0.2 * 255.0**2  # curvature weight, in squared-intensity units
    dt: float = 0.5
    epsilon: float = 1.0  # width of the regularized Dirac
    eta: int = 5  # sign flips below this count as "no change"
    patience: int = 5  # consecutive quiet iterations needed to stop
    max_iter: int = 1000
    polarity: str = "bright"  # which phase is reported as object: bright | dark | as-is


def circle_tiling(shape: Tuple[int, int], clip: float = 1.0) -> np.ndarray:
    """Initial level set: a grid of circles, positive inside.

    The grid pitch is a quarter of the smaller dimension (at least 2 px) and
    each radius is 40% of the pitch.  Values are the signed distance to the
    nearest circle boundary, clipped to ``[-clip, clip]``.
    """
    h, w = shape
    pitch = max(min(h, w) / 4.0, 2.0)
    radius = 0.4 * pitch
    y = np.arange(h, dtype=np.float64)
    x = np.arange(w, dtype=np.float64)
    # offset from the nearest circle centre; centres sit at pitch/2 + k*pitch
    dy = np.abs(y % pitch - pitch / 2.0)
    dx = np.abs(x % pitch - pitch / 2.0)
    d = np.sqrt(dy[:, None] ** 2 + dx[None, :] ** 2)
    return np.clip(radius - d, -clip, clip)


class ChanVese:
    """Two-phase piecewise-constant Chan-Vese level set.

    Semi-implicit descent on intensities scaled to [0, 1]::

        phi' = (phi + dt*d(phi)*(nu*K + F)) / (1 + nu*dt*d(phi)*sum(C))

    where ``F = l2*(u - c2)**2 - l1*(u - c1)**2`` divided by ``max|F|``,
    ``K`` and ``C`` are the usual neighbour-weighted curvature terms and
    ``d(phi) = eps / (eps**2 + phi**2)``.  ``nu`` is given in raw
    squared-intensity units.  Iteration stops once fewer than ``eta`` pixels
    change sign for ``patience`` iterations in a row, or after ``max_iter``.
    """

    name = "chanvese"

    def __init__(self, config: ChanVeseConfig = ChanVeseConfig()):
        if config.polarity not in ("bright", "dark", "as-is"):
            raise ValueError(f"unknown polarity {config.polarity!r}")
        self.config = config
        self.last_iterations = 0

    def evolve(self, img, counter: Optional[CostCounter] = None) -> Tuple[np.ndarray, int]:
        """Run the level set; returns ``(phi, iterations)``."""
        cfg = self.config
        arr = as_gray(img)
        if arr.shape[0] < 8 or arr.shape[1] < 8:
            raise DimensionTooSmallError(f"Chan-Vese needs at least 8x8, got {arr.shape[::-1]}")
        u = arr / 255.0
        nu = cfg.nu / 255.0**2
        eps = cfg.epsilon
        phi = circle_tiling(arr.shape)
        inside = phi > 0
        quiet = 0
        it = 0
        while it < cfg.max_iter:
            it += 1
            n_in = np.count_nonzero(inside)
            c1 = u[inside].mean() if n_in else 0.0
            c2 = u[~inside].mean() if n_in < inside.size else 0.0
            force = cfg.lambda2 * (u - c2) ** 2 - cfg.lambda1 * (u - c1) ** 2
            peak = np.abs(force).max()
            if peak > 0:
                force /= peak
            p = np.pad(phi, 1, mode="edge")
            right, left = p[1:-1, 2:], p[1:-1, :-2]
            down, up = p[2:, 1:-1], p[:-2, 1:-1]
            cx = (right - left) / 2.0
            cy = (down - up) / 2.0
            k1 = 1.0 / np.sqrt(1e-16 + (right - phi) ** 2 + cy**2)
            k2 = 1.0 / np.sqrt(1e-16 + (phi - left) ** 2 + cy**2)
            k3 = 1.0 / np.sqrt(1e-16 + cx**2 + (down - phi) ** 2)
            k4 = 1.0 / np.sqrt(1e-16 + cx**2 + (phi - up) ** 2)
            step = cfg.dt * eps / (eps**2 + phi**2)
            num = phi + step * (nu * (right * k1 + left * k2 + down * k3 + up * k4) + force)
            phi = num / (1.0 + nu * step * (k1 + k2 + k3 + k4))
            now = phi > 0
            flips = np.count_nonzero(now != inside)
            inside = now
            quiet = quiet + 1 if flips < cfg.eta else 0
            if quiet >= cfg.patience:
                break
        if counter is not None:
            counter.add(it * arr.size)
        self.last_iterations = it
        return phi, it

    def segment(self, img, counter: Optional[CostCounter] = None) -> np.ndarray:
        arr = as_gray(img)
        phi, _ = self.evolve(arr, counter)
        mask = phi > 0
        if self.config.polarity != "as-is" and 0 < mask.sum() < mask.size:
            bright_inside = arr[mask].mean() >= arr[~mask].mean()
            if bright_inside != (self.config.polarity == "bright"):
                mask = ~mask
        return mask


# ---------------------------------------------------------------------------
# Region growing


class RegionGrow:
    """Seeded region growing: the 8-connected set of pixels within ``tau`` of
    the seed neighbourhood mean that contains the seed.

    Without an explicit seed the brightest pixel of a 5x5 box-filtered copy of
    the image is used (``polarity="bright"``), or the darkest for ``"dark"``.
    """

    name = "regiongrow"

    def __init__(self, tau: float = 25.0, seed: Optional[Tuple[int, int]] = None, polarity: str = "bright"):
        self.tau = tau
        self.seed = seed
        self.polarity = polarity

    def segment(self, img, counter: Optional[CostCounter] = None, seed=None) -> np.ndarray:
        arr = as_gray(img)
        seed = seed if seed is not None else self.seed
        smooth = ndimage.uniform_filter(arr, size=5, mode="mirror")
        if seed is None:
            flat = np.argmax(smooth) if self.polarity == "bright" else np.argmin(smooth)
            y, x = np.unravel_index(flat, arr.shape)
        else:
            x, y = seed
        mu = smooth[y, x]
        close = np.abs(arr - mu) <= self.tau
        if counter is not None:
            counter.add(arr.size)
        if not close[y, x]:
            return np.zeros(arr.shape, dtype=bool)
        labels, _ = ndimage.label(close, structure=EIGHT)
        return labels == labels[y, x]


def region_grow_refine(
    img,
    mask,
    tau: float = 25.0,
    max_sweeps: Optional[int] = None,
    counter: Optional[CostCounter] = None,
) -> np.ndarray:
    """Adjust a mask's border toward the object's mean intensity.

    ``mu`` is the mean of ``img`` under ``mask``.  Each sweep adds background
    pixels 8-adjacent to the object with ``|I - mu| <= tau`` and drops object
    pixels 8-adjacent to the background with ``|I - mu| > tau``.  Stops at a
    fixed point or after ``max_sweeps`` sweeps.
    """
    arr = as_gray(img)
    m = as_mask(mask).copy()
    if m.shape != arr.shape:
        raise ValueError(f"mask shape {m.shape} != image shape {arr.shape}")
    if not m.any():
        raise EmptyMaskError("cannot refine an empty mask")
    mu = arr[m].mean()
    close = np.abs(arr - mu) <= tau
    if counter is not None:
        counter.add(m.sum())
    sweeps = 0
    while max_sweeps is None or sweeps < max_sweeps:
        sweeps += 1
        outer = ndimage.binary_dilation(m, structure=EIGHT) & ~m
        inner = m & ndimage.binary_dilation(~m, structure=EIGHT)
        if counter is not None:
            counter.add(np.count_nonzero(outer) + np.count_nonzero(inner))
        add = outer & close
        drop = inner & ~close
        if not add.any() and not drop.any():
            break
        m |= add
        m &= ~drop
    return m


def select_component_at(mask, seed: Tuple[int, int]) -> np.ndarray:
    """Keep the 8-connected component under ``seed = (x, y)``, or the component
    nearest to it (Euclidean distance to its closest pixel)."""
    m = as_mask(mask)
    x, y = seed
    h, w = m.shape
    if not (0 <= x < w and 0 <= y < h):
        raise ValueError(f"seed {seed} outside {w}x{h} raster")
    if not m.any():
        raise EmptyMaskError("no components to select from")
    labels, _ = ndimage.label(m, structure=EIGHT)
    if m[y, x]:
        return labels == labels[y, x]
    ys, xs = np.nonzero(m)
    d2 = (ys - y) ** 2 + (xs - x) ** 2
    nearest = np.flatnonzero(d2 == d2.min())
    label = labels[ys[nearest], xs[nearest]].min()
    return labels == label


# ---------------------------------------------------------------------------
# Timed at-resolution driver


@dataclass(frozen=True)
class ResolutionRunRecord:
    level: int
    accuracy: float
    time: float
    mask: np.ndarray = field(repr=False, compare=False, default=None)


def run_at_level(
    pyr: Pyramid,
    level: int,
    segmenter,
    click: Optional[Tuple[int, int]] = None,
    tau: float = 25.0,
    timing: str = "cost",
) -> Tuple[np.ndarray, float]:
    """Segment ``pyr[level]`` and bring the result to level 0.

    For ``level > 0`` the mask is upsampled and refined by region growing at
    the original resolution with at most ``4 * 2**level`` sweeps; an empty
    coarse mask is passed through unrefined.  Returns ``(mask, elapsed)``
    where ``elapsed`` is seconds or cost units depending on ``timing``.
    """
    if timing not in TIMING_MODES:
        raise ValueError(f"timing must be one of {TIMING_MODES}, got {timing!r}")
    if not 0 <= level < pyr.r:
        raise ValueError(f"level {level} outside pyramid of {pyr.r} levels")
    counter = CostCounter()
    start = time.perf_counter()
    mask = segmenter.segment(pyr[level], counter)
    if level > 0:
        factor = 2**level
        mask = upsample_mask(mask, factor, pyr.shape)
        counter.add(mask.size)
        if mask.any():
            mask = region_grow_refine(pyr[0], mask, tau, max_sweeps=4 * factor, counter=counter)
    if click is not None and mask.any():
        mask = select_component_at(mask, click)
        counter.add(mask.size)
    elapsed = time.perf_counter() - start
    if timing == "cost":
        return mask, float(counter.total)
    return mask, max(elapsed, 1e-9)


def segment_at_level(
    pyr: Pyramid,
    level: int,
    segmenter,
    gold,
    click: Optional[Tuple[int, int]] = None,
    tau: float = 25.0,
    timing: str = "cost",
) -> ResolutionRunRecord:
    """Timed segmentation at one level plus Dice against ``gold``.

    The accuracy computation is outside the timed span.
    """
    gold = as_mask(gold)
    if gold.shape != pyr.shape:
        raise ValueError(f"gold mask shape {gold.shape} != image shape {pyr.shape}")
    mask, elapsed = run_at_level(pyr, level, segmenter, click, tau, timing)
    return ResolutionRunRecord(level, dice(mask, gold), elapsed, mask)
