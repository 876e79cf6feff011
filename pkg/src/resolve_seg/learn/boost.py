"""SAMME AdaBoost and RAMOBoost over weighted decision trees."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..tradeoff import argmax_coarse
from .sampling import apportion, interpolate, nearest_neighbours
from .tree import DecisionTree, TreeConfig, train_tree

MODEL_FORMAT = "resolve-seg-boost"
MODEL_VERSION = 1
ALGORITHMS = ("adaboost", "ramoboost")
MIN_ERROR = 1e-10  # caps the round weight of a perfect round


class NoValidRoundError(RuntimeError):
    pass


@dataclass
class BoostModel:
    algorithm: str
    n_classes: int
    n_features: int
    trees: List[DecisionTree] = field(default_factory=list)
    betas: List[float] = field(default_factory=list)

    @property
    def n_rounds(self) -> int:
        return len(self.trees)

    def scores(self, X) -> np.ndarray:
        """``score[i, c] = sum_t beta_t * [tree_t(x_i) == c]``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        out = np.zeros((len(X), self.n_classes))
        rows = np.arange(len(X))
        for tree, beta in zip(self.trees, self.betas):
            out[rows, tree.predict(X)] += beta
        return out

    def predict(self, X) -> np.ndarray:
        s = self.scores(X)
        return np.array([argmax_coarse(row) for row in s], dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "algorithm": self.algorithm,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "rounds": [{"beta": b, "tree": t.to_dict()} for t, b in zip(self.trees, self.betas)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a boosting model document (format={d.get('format')!r})")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        nf = int(d["n_features"])
        return cls(
            algorithm=d["algorithm"],
            n_classes=int(d["n_classes"]),
            n_features=nf,
            trees=[DecisionTree.from_dict(r["tree"], nf) for r in d["rounds"]],
            betas=[float(r["beta"]) for r in d["rounds"]],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "BoostModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def predict(model: BoostModel, x) -> Tuple[int, np.ndarray]:
    """Class and score vector for a single feature vector."""
    s = model.scores(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    return argmax_coarse(s), s


def _check(X, y, n_classes):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X and y are not aligned")
    if len(np.unique(y)) < 2:
        raise ValueError("boosting needs at least two classes")
    k = int(y.max()) + 1 if n_classes is None else n_classes
    if k < 2 or y.min() < 0 or y.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    return X, y, k


def _boost(X, y, n_classes, n_rounds, tree_config, algorithm, augment=None, history=None):
    """Shared SAMME loop.

    ``augment(weights)`` may return extra ``(X_syn, y_syn)`` rows that join
    tree fitting only, at the mean real weight.
    """
    n = len(y)
    w = np.full(n, 1.0 / n)
    model = BoostModel(algorithm, n_classes, X.shape[1])
    log_k1 = np.log(n_classes - 1)
    for _ in range(n_rounds):
        Xf, yf, wf = X, y, w
        if augment is not None:
            syn = augment(w)
            if syn is not None and len(syn[1]):
                Xf = np.vstack([X, syn[0]])
                yf = np.concatenate([y, syn[1]])
                wf = np.concatenate([w, np.full(len(syn[1]), w.mean())])
        tree = train_tree(Xf, yf, wf, n_classes, tree_config)
        miss = tree.predict(X) != y
        err = float(w[miss].sum() / w.sum())
        if err >= 1.0 - 1.0 / n_classes:
            if history is not None:
                history.append(None)
            continue
        beta = float(np.log((1.0 - max(err, MIN_ERROR)) / max(err, MIN_ERROR)) + log_k1)
        model.trees.append(tree)
        model.betas.append(beta)
        if err == 0.0:
            if history is not None:
                history.append(w.copy())
            break
        w = np.where(miss, w * np.exp(beta), w)
        w = w / w.sum()
        if history is not None:
            history.append(w.copy())
    if not model.trees:
        raise NoValidRoundError("every boosting round was no better than chance")
    return model


def adaboost_train(
    X, y, n_rounds: int = 10, n_classes: Optional[int] = None,
    tree_config: TreeConfig = TreeConfig(), history: Optional[list] = None,
) -> BoostModel:
    """Multiclass AdaBoost (SAMME).

    Round weight ``beta = ln((1 - err) / err) + ln(K - 1)``; misclassified
    samples are scaled by ``exp(beta)`` and weights renormalized.  Rounds
    with ``err >= 1 - 1/K`` are skipped; a perfect round ends training.
    ``history``, if given, receives the weight vector after every round.
    """
    X, y, k = _check(X, y, n_classes)
    return _boost(X, y, k, n_rounds, tree_config, "adaboost", history=history)


@dataclass(frozen=True)
class RamoConfig:
    k1: int = 5  # neighbours for the minority difficulty score
    k2: int = 5  # same-class neighbours used as interpolation partners
    n_syn_per_round: Optional[int] = None  # default: total deficit, capped at dataset size


class RamoSampler:
    """Per-round minority oversampling for RAMOBoost.

    For every class ``c`` with a deficit against the largest class, members
    are drawn with probability proportional to ``(1 + delta_i) * w_i``, where
    ``delta_i`` is the fraction of the ``k1`` nearest neighbours outside
    ``c`` and ``w_i`` the current boosting weight.  Each draw is interpolated
    toward a random one of its ``k2`` nearest same-class neighbours.
    """

    def __init__(self, X, y, n_classes, config: RamoConfig, rng: np.random.Generator):
        self.X, self.y, self.rng = X, y, rng
        counts = np.bincount(y, minlength=n_classes)
        deficit = np.where(counts > 0, counts.max() - counts, 0)
        n_syn = config.n_syn_per_round
        if n_syn is None:
            n_syn = min(int(deficit.sum()), len(y))
        self.alloc = apportion(n_syn, deficit) if deficit.sum() > 0 else np.zeros(n_classes, dtype=np.int64)
        self.members, self.difficulty, self.partners = {}, {}, {}
        if not self.alloc.any():
            return
        nn_all = nearest_neighbours(X, config.k1)
        for c in np.flatnonzero(self.alloc):
            rows = np.flatnonzero(y == c)
            self.members[c] = rows
            self.difficulty[c] = np.array([np.mean(y[nn_all[i]] != c) for i in rows])
            local = nearest_neighbours(X[rows], config.k2)
            self.partners[c] = [rows[nb] for nb in local]

    @property
    def n_synthetic(self) -> int:
        return int(self.alloc.sum())

    def __call__(self, w):
        if not self.alloc.any():
            return None
        xs, ys = [], []
        for c, rows in self.members.items():
            m = int(self.alloc[c])
            p = (1.0 + self.difficulty[c]) * w[rows]
            p = p / p.sum()
            picks = self.rng.choice(len(rows), size=m, p=p)
            sources = rows[picks]
            partners = np.array([
                s if len(self.partners[c][j]) == 0
                else self.partners[c][j][self.rng.integers(len(self.partners[c][j]))]
                for s, j in zip(sources, picks)
            ], dtype=np.int64)
            xs.append(interpolate(self.X, sources, partners, self.rng))
            ys.append(np.full(m, c, dtype=np.int64))
        return np.vstack(xs), np.concatenate(ys)


def ramoboost_train(
    X, y, n_rounds: int = 10, config: RamoConfig = RamoConfig(), seed=None,
    n_classes: Optional[int] = None, tree_config: TreeConfig = TreeConfig(),
    history: Optional[list] = None, synthetic_log: Optional[list] = None,
) -> BoostModel:
    """RAMOBoost: SAMME with fresh minority synthetics before every round.

    Synthetic rows are allotted to classes in proportion to their deficit
    against the largest class and take part in tree fitting only; errors and
    weight updates use the real rows.  ``synthetic_log`` collects each
    round's ``(X_syn, y_syn)``.
    """
    X, y, k = _check(X, y, n_classes)
    n = len(y)
    if not (1 <= config.k1 < n and 1 <= config.k2 < n):
        raise ValueError(f"k1 and k2 must lie in [1, {n})")
    sampler = RamoSampler(X, y, k, config, np.random.default_rng(seed))
    augment = sampler if sampler.n_synthetic else None
    if augment is not None and synthetic_log is not None:
        def augment(w, _s=sampler):
            out = _s(w)
            synthetic_log.append(out)
            return out
    model = _boost(X, y, k, n_rounds, tree_config, "ramoboost", augment=augment, history=history)
    return model
