"""Accuracy/time trade-off measure and best-resolution labelling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ALPHA_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


def _pow(base: float, exp: float) -> float:
    # 0**0 := 1
    if exp == 0.0:
        return 1.0
    return base**exp


def omega(accuracy: float, t_norm: float, alpha: float) -> float:
    """``accuracy**alpha * (1 - t_norm)**(1 - alpha)``; all inputs in [0, 1]."""
    for name, v in (("accuracy", accuracy), ("t_norm", t_norm), ("alpha", alpha)):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return _pow(accuracy, alpha) * _pow(1.0 - t_norm, 1.0 - alpha)


@dataclass(frozen=True)
class ResolutionLabel:
    best_level: int
    omegas: tuple
    alpha: float


def argmax_coarse(values: Sequence[float]) -> int:
    """Index of the maximum; ties go to the largest index."""
    vals = np.asarray(values, dtype=np.float64)
    return int(len(vals) - 1 - np.argmax(vals[::-1]))


def label_best_resolution(
    accuracies: Sequence[float], times: Sequence[float], alpha: float
) -> ResolutionLabel:
    """Pick the level maximizing omega with times normalized by their max.

    ``accuracies[i]`` and ``times[i]`` belong to pyramid level ``i``.
    """
    if len(accuracies) == 0:
        raise ValueError("no resolution records")
    if len(accuracies) != len(times):
        raise ValueError("accuracies and times differ in length")
    t = np.asarray(times, dtype=np.float64)
    if np.any(t <= 0):
        raise ValueError("times must be positive")
    t_norm = t / t.max()
    omegas = tuple(omega(float(a), float(tn), alpha) for a, tn in zip(accuracies, t_norm))
    return ResolutionLabel(argmax_coarse(omegas), omegas, alpha)


def label_records(records, alpha: float) -> ResolutionLabel:
    """``label_best_resolution`` over ``ResolutionRunRecord``-like objects."""
    if not records:
        raise ValueError("no resolution records")
    ordered = sorted(records, key=lambda rec: rec.level)
    levels = [rec.level for rec in ordered]
    if levels != list(range(len(levels))):
        raise ValueError(f"records must cover levels 0..r-1, got {levels}")
    return label_best_resolution(
        [rec.accuracy for rec in ordered], [rec.time for rec in ordered], alpha
    )
