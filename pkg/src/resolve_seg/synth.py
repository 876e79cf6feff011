"""Synthetic blob images with analytic gold-standard masks.

Each scene holds one to three bright blobs (disks, ellipses or lobed
"rounded polygons") on a flat background, with randomized size, contrast,
edge blur and additive Gaussian noise.  Image ``i`` of a corpus depends only
on ``(seed, i)``, so corpora can be generated in any order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

SHAPES = ("disk", "ellipse", "lobed")


@dataclass(frozen=True)
class Blob:
    shape: str
    cx: float
    cy: float
    radius: float
    aspect: float = 1.0  # minor/major axis ratio (ellipse)
    angle: float = 0.0
    lobes: int = 0
    lobe_amp: float = 0.0


@dataclass(frozen=True)
class Scene:
    size: Tuple[int, int]  # (height, width)
    blobs: Tuple[Blob, ...]
    background: float
    contrast: float
    edge_sigma: float
    noise: float

    def to_dict(self) -> dict:
        return asdict(self)


def blob_raster(blob: Blob, shape: Tuple[int, int]) -> np.ndarray:
    """Pixels whose centre ``(x, y)`` lies inside ``blob``."""
    h, w = shape
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    dx, dy = x - blob.cx, y - blob.cy
    if blob.shape == "disk":
        return dx**2 + dy**2 <= blob.radius**2
    if blob.shape == "ellipse":
        c, s = np.cos(blob.angle), np.sin(blob.angle)
        u = (c * dx + s * dy) / blob.radius
        v = (-s * dx + c * dy) / (blob.radius * blob.aspect)
        return u**2 + v**2 <= 1.0
    if blob.shape == "lobed":
        theta = np.arctan2(dy, dx)
        r = blob.radius * (1.0 + blob.lobe_amp * np.cos(blob.lobes * theta + blob.angle))
        return np.hypot(dx, dy) <= r
    raise ValueError(f"unknown blob shape {blob.shape!r}")


def render(scene: Scene, rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Rasterize a scene; returns ``(image, gold_mask)``.

    The gold mask is the union of the blob rasters.  The image is the mask
    scaled by ``contrast`` over ``background``, blurred by ``edge_sigma`` and
    corrupted with ``noise``-sigma Gaussian noise, then clipped to [0, 255].
    """
    gold = np.zeros(scene.size, dtype=bool)
    for blob in scene.blobs:
        gold |= blob_raster(blob, scene.size)
    img = scene.background + scene.contrast * gold.astype(np.float64)
    if scene.edge_sigma > 0:
        img = ndimage.gaussian_filter(img, scene.edge_sigma, mode="nearest")
    if scene.noise > 0:
        if rng is None:
            raise ValueError("a generator is required for a noisy scene")
        img = img + rng.normal(0.0, scene.noise, scene.size)
    return np.clip(img, 0.0, 255.0), gold


# Frozen generator constants (tuned once so that labels at alpha=0.5 spread
# over several pyramid levels).
MAIN_RADIUS = (0.06, 0.30)  # fraction of the smaller side, log-uniform
EXTRA_RADIUS = (0.02, 0.08)
BLOB_COUNT_P = (0.45, 0.35, 0.20)
BACKGROUND = (30.0, 100.0)
CONTRAST = (45.0, 140.0)
EDGE_SIGMA = (0.0, 3.0)
NOISE = (0.0, 35.0)


def _random_blob(rng: np.random.Generator, shape: Tuple[int, int], radius: float) -> Blob:
    h, w = shape
    kind = SHAPES[rng.integers(len(SHAPES))]
    margin = min(radius * 1.3, min(h, w) / 2.0 - 1.0)
    cx = rng.uniform(margin, w - 1 - margin)
    cy = rng.uniform(margin, h - 1 - margin)
    if kind == "disk":
        return Blob("disk", cx, cy, radius)
    if kind == "ellipse":
        return Blob("ellipse", cx, cy, radius, aspect=rng.uniform(0.35, 0.9), angle=rng.uniform(0, np.pi))
    return Blob(
        "lobed", cx, cy, radius, angle=rng.uniform(0, 2 * np.pi),
        lobes=int(rng.integers(3, 7)), lobe_amp=rng.uniform(0.1, 0.3),
    )


def random_scene(rng: np.random.Generator, size: Tuple[int, int]) -> Scene:
    side = min(size)
    n_blobs = int(rng.choice(len(BLOB_COUNT_P), p=BLOB_COUNT_P)) + 1
    lo, hi = MAIN_RADIUS
    radii = [side * np.exp(rng.uniform(np.log(lo), np.log(hi)))]
    radii += [side * rng.uniform(*EXTRA_RADIUS) for _ in range(n_blobs - 1)]
    blobs = tuple(_random_blob(rng, size, r) for r in radii)
    background = rng.uniform(*BACKGROUND)
    contrast = min(rng.uniform(*CONTRAST), 250.0 - background)
    return Scene(
        size=tuple(size),
        blobs=blobs,
        background=float(background),
        contrast=float(contrast),
        edge_sigma=float(rng.uniform(*EDGE_SIGMA)),
        noise=float(rng.uniform(*NOISE)),
    )


def image_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def synth_image(seed: int, index: int, size: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray, Scene]:
    rng = image_rng(seed, index)
    scene = random_scene(rng, size)
    img, gold = render(scene, rng)
    return img, gold, scene


def synth_images(n: int, size: Tuple[int, int], seed: int) -> List[Tuple[np.ndarray, np.ndarray, Scene]]:
    return [synth_image(seed, i, size) for i in range(n)]
