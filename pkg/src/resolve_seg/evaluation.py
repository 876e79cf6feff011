"""Segmentation overlap, classification metrics and run aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .imaging import as_mask
from .tradeoff import argmax_coarse


def dice(a, b) -> float:
    """``2|a & b| / (|a| + |b|)``; two empty masks score 1."""
    a, b = as_mask(a), as_mask(b)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def confusion_matrix(actual, predicted, n_classes: int) -> np.ndarray:
    """Counts with rows = actual class, columns = predicted class."""
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if actual.shape != predicted.shape:
        raise ValueError("actual and predicted differ in length")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (actual, predicted), 1)
    return cm


@dataclass(frozen=True)
class ClassificationReport:
    precision: np.ndarray  # nan where the class is never predicted
    recall: np.ndarray  # nan where the class never occurs
    f1: np.ndarray  # nan where the class never occurs
    accuracy: float
    g_mean: float


def classification_metrics(cm) -> ClassificationReport:
    cm = np.asarray(cm, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError(f"confusion matrix must be square, got {cm.shape}")
    if np.any(cm < 0):
        raise ValueError("confusion matrix has negative entries")
    total = cm.sum()
    if total <= 0:
        raise ValueError("empty confusion matrix")
    diag = np.diag(cm)
    actual = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, diag / predicted, np.nan)
        recall = np.where(actual > 0, diag / actual, np.nan)
    p0 = np.nan_to_num(precision, nan=0.0)
    f1 = np.full(len(diag), np.nan)
    for i in range(len(diag)):
        if actual[i] == 0:
            continue
        s = p0[i] + recall[i]
        f1[i] = 0.0 if s == 0 else 2.0 * p0[i] * recall[i] / s
    present = recall[actual > 0]
    g_mean = float(np.prod(present) ** (1.0 / len(present)))
    return ClassificationReport(precision, recall, f1, float(diag.sum() / total), g_mean)


@dataclass(frozen=True)
class ConfusionSummary:
    mean: np.ndarray
    std: np.ndarray

    @property
    def mean_display(self) -> np.ndarray:
        return round_half_up(self.mean)

    @property
    def std_display(self) -> np.ndarray:
        return round_half_up(self.std)


def round_half_up(x) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def aggregate_confusions(cms: Sequence) -> ConfusionSummary:
    """Elementwise mean and sample standard deviation of confusion matrices."""
    if len(cms) == 0:
        raise ValueError("no confusion matrices")
    stack = np.stack([np.asarray(c, dtype=np.float64) for c in cms])
    if any(np.shape(c) != stack.shape[1:] for c in cms):
        raise ValueError("confusion matrices differ in shape")
    mean = stack.mean(axis=0)
    std = stack.std(axis=0, ddof=1) if len(stack) > 1 else np.zeros_like(mean)
    return ConfusionSummary(mean, std)


RESOLUTIONS = ("est", "orig", "min", "peak", "sel")
ACCURACY_RATIOS = (("est", "orig"), ("est", "min"), ("est", "peak"), ("est", "sel"))
TIME_RATIOS = (("orig", "est"), ("min", "est"), ("peak", "est"), ("sel", "est"))


def mean_ratio(num, den) -> tuple:
    """Mean of per-item ``num / den``.

    ``0 / 0`` counts as 1; ``x / 0`` with ``x > 0`` is dropped.  Returns
    ``(mean, n_used, n_dropped)``; the mean is nan when nothing is usable.
    """
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    both_zero = (num == 0) & (den == 0)
    ok = den != 0
    ratios = np.concatenate([num[ok] / den[ok], np.ones(int(both_zero.sum()))])
    dropped = int((~ok & ~both_zero).sum())
    mean = float(ratios.mean()) if ratios.size else float("nan")
    return mean, int(ratios.size), dropped


def impact_ratios(accuracy: Dict[str, Sequence], time: Dict[str, Sequence]) -> Dict[str, float]:
    """Mean-of-ratio columns comparing the estimated level with the others.

    ``accuracy`` and ``time`` map each of ``est, orig, min, peak, sel`` to
    per-image values aligned by position.  Keys of the result look like
    ``acc_est/orig`` and ``time_orig/est``.
    """
    for key in RESOLUTIONS:
        if key not in accuracy or key not in time:
            raise KeyError(f"missing resolution {key!r}")
    n = len(accuracy["est"])
    if any(len(accuracy[k]) != n or len(time[k]) != n for k in RESOLUTIONS):
        raise ValueError("per-image records are not aligned")
    out = {}
    for a, b in ACCURACY_RATIOS:
        out[f"acc_{a}/{b}"], _, out[f"acc_{a}/{b}_dropped"] = mean_ratio(accuracy[a], accuracy[b])
    for a, b in TIME_RATIOS:
        out[f"time_{a}/{b}"], _, out[f"time_{a}/{b}_dropped"] = mean_ratio(time[a], time[b])
    return out


def peak_level(labels, n_classes: int) -> int:
    """Most frequent label; ties go to the coarser level."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)
    return argmax_coarse(counts)
