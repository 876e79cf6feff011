"""Nearest-neighbour helpers and ADASYN oversampling."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def nearest_neighbours(X, k: int, candidates=None) -> np.ndarray:
    """Indices of the ``k`` nearest rows (Euclidean) for every row of ``X``.

    Neighbours are drawn from ``candidates`` (row indices into ``X``; default
    all rows) and never include the row itself.  Distance ties are broken by
    index.  Rows with fewer than ``k`` candidates get what is available, so
    the result is a list of arrays.
    """
    X = np.asarray(X, dtype=np.float64)
    cand = np.arange(len(X)) if candidates is None else np.asarray(candidates)
    d = cdist(X, X[cand])
    self_hit = cand[None, :] == np.arange(len(X))[:, None]
    d[self_hit] = np.inf
    order = np.lexsort((np.broadcast_to(cand, d.shape), d), axis=1)
    out = []
    for i in range(len(X)):
        ok = order[i][np.isfinite(d[i, order[i]])][:k]
        out.append(cand[ok])
    return out


def apportion(total: int, shares) -> np.ndarray:
    """Split ``total`` into integers proportional to ``shares`` (largest remainder).

    Zero shares everywhere means an even split.
    """
    shares = np.asarray(shares, dtype=np.float64)
    if total <= 0 or len(shares) == 0:
        return np.zeros(len(shares), dtype=np.int64)
    s = shares.sum()
    p = shares / s if s > 0 else np.full(len(shares), 1.0 / len(shares))
    raw = p * total
    base = np.floor(raw).astype(np.int64)
    left = total - int(base.sum())
    # stable: ties go to the lower index
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:left]] += 1
    return base


def interpolate(X, sources, partners, rng: np.random.Generator) -> np.ndarray:
    """``x + u * (x_nn - x)`` with ``u ~ U[0, 1]``, one row per pair."""
    X = np.asarray(X, dtype=np.float64)
    u = rng.random(len(sources))[:, None]
    xs = X[sources]
    return xs + u * (X[partners] - xs)


def minority_difficulty(X, y, cls: int, k: int) -> np.ndarray:
    """Fraction of each class-``cls`` row's ``k`` nearest neighbours (whole
    dataset) that belong to another class."""
    rows = np.flatnonzero(y == cls)
    nn = nearest_neighbours(X, k)
    return np.array([np.mean(y[nn[i]] != cls) if len(nn[i]) else 0.0 for i in rows])


def adasyn_sample(X, y, beta: float = 0.7, k: int = 5, rng=None):
    """Adaptive synthetic oversampling of every non-majority class.

    Class ``c`` gains ``floor((n_majority - n_c) * beta)`` synthetic rows,
    spread over its members in proportion to their neighbourhood difficulty.
    Each synthetic row interpolates toward one of the member's ``k`` nearest
    same-class neighbours; a single-member class is duplicated instead.
    Returns ``(X_out, y_out)`` with the synthetic rows appended.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(rng)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y)
    n_max = counts.max()
    new_X, new_y = [X], [y]
    for cls in np.flatnonzero(counts):
        g = int(np.floor((n_max - counts[cls]) * beta + 1e-9))
        if g <= 0:
            continue
        rows = np.flatnonzero(y == cls)
        per_row = apportion(g, minority_difficulty(X, y, cls, k))
        sources = np.repeat(rows, per_row)
        partners = _same_class_partners(X, rows, sources, k, rng)
        new_X.append(interpolate(X, sources, partners, rng))
        new_y.append(np.full(g, cls, dtype=np.int64))
    return np.concatenate(new_X), np.concatenate(new_y)


def _same_class_partners(X, rows, sources, k, rng) -> np.ndarray:
    """Random same-class neighbour for each source row (itself if alone)."""
    local = nearest_neighbours(X[rows], k)
    pos = {r: i for i, r in enumerate(rows)}
    out = np.empty(len(sources), dtype=np.int64)
    for j, s in enumerate(sources):
        nb = local[pos[s]]
        out[j] = s if len(nb) == 0 else rows[nb[rng.integers(len(nb))]]
    return out
