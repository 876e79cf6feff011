"""Experiment configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored.  Tuple-valued keys take
comma-separated values (``alphas = 0.1, 0.5``); ``grid`` is written ``4x4``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

from .learn.boost import RamoConfig
from .learn.tree import TreeConfig
from .segment import TIMING_MODES, ChanVeseConfig, RegionGrow, ChanVese
from .tradeoff import ALPHA_GRID

SEGMENTERS = ("chanvese", "regiongrow")
LEARNERS = ("adaboost", "ramoboost", "adasyn")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # pyramid and trade-off
    r: int = 6
    alpha: float = 0.5
    alphas: Tuple[float, ...] = ALPHA_GRID
    timing: str = "cost"
    # segmentation
    segmenter: str = "chanvese"
    tau: float = 25.0
    polarity: str = "bright"
    cv_lambda1: float = 1.0
    cv_lambda2: float = 1.0
    cv_nu: float = 0.2 * 255.0**2
    cv_dt: float = 0.5
    cv_epsilon: float = 1.0
    cv_eta: int = 5
    cv_patience: int = 5
    cv_max_iter: int = 1000
    # features
    grid: Tuple[int, int] = (4, 4)
    bins: int = 10
    # learning
    learner: str = "ramoboost"
    learners: Tuple[str, ...] = ("adaboost", "ramoboost")
    n_rounds: int = 10
    max_depth: int = 6
    min_leaf_fraction: float = 0.01
    k1: int = 5
    k2: int = 5
    n_syn: Optional[int] = None
    adasyn_beta: float = 0.7
    adasyn_k: int = 5
    # protocol
    folds: int = 10
    repeats: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError("r must be >= 1")
        for a in (self.alpha, *self.alphas):
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha {a} outside [0, 1]")
        if self.timing not in TIMING_MODES:
            raise ConfigError(f"timing must be one of {TIMING_MODES}")
        if self.segmenter not in SEGMENTERS:
            raise ConfigError(f"segmenter must be one of {SEGMENTERS}")
        for name in (self.learner, *self.learners):
            if name not in LEARNERS:
                raise ConfigError(f"learner must be one of {LEARNERS}, got {name!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if len(self.grid) != 2 or min(self.grid) < 1 or self.bins < 1:
            raise ConfigError("grid and bins must be positive")

    def replace(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def chan_vese(self) -> ChanVeseConfig:
        return ChanVeseConfig(
            lambda1=self.cv_lambda1, lambda2=self.cv_lambda2, nu=self.cv_nu, dt=self.cv_dt,
            epsilon=self.cv_epsilon, eta=self.cv_eta, patience=self.cv_patience,
            max_iter=self.cv_max_iter, polarity=self.polarity,
        )

    def make_segmenter(self):
        if self.segmenter == "chanvese":
            return ChanVese(self.chan_vese())
        return RegionGrow(tau=self.tau, polarity=self.polarity)

    def tree_config(self) -> TreeConfig:
        return TreeConfig(max_depth=self.max_depth, min_leaf_fraction=self.min_leaf_fraction)

    def ramo_config(self) -> RamoConfig:
        return RamoConfig(k1=self.k1, k2=self.k2, n_syn_per_round=self.n_syn)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name), f.name)}")
        return "\n".join(lines) + "\n"


def _format(value, name: str) -> str:
    if value is None:
        return "none"
    if name == "grid":
        return f"{value[0]}x{value[1]}"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


def _parse(name: str, raw: str, default):
    raw = raw.strip()
    if name == "grid":
        parts = raw.lower().replace(",", "x").split("x")
        if len(parts) != 2:
            raise ConfigError(f"grid must look like 4x4, got {raw!r}")
        return (int(parts[0]), int(parts[1]))
    if name == "n_syn":
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(default, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if default and isinstance(default[0], float):
            return tuple(float(s) for s in items)
        return tuple(items)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    defaults = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parse(key, raw, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path=None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return parse_config(Path(path).read_text(), str(path))
