"""End-to-end orchestration: labeling, cross-validated evaluation, inference."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ExperimentConfig
from .corpus import Corpus
from .evaluation import (
    RESOLUTIONS,
    aggregate_confusions,
    classification_metrics,
    confusion_matrix,
    impact_ratios,
    peak_level,
)
from .features import extract_features
from .imagefile import load_image, save_mask
from .imaging import build_pyramid
from .learn.boost import BoostModel, adaboost_train, ramoboost_train
from .learn.sampling import adasyn_sample
from .segment import run_at_level, segment_at_level
from .tradeoff import label_best_resolution

log = logging.getLogger(__name__)

# substream tags for SeedSequence spawn keys
SHUFFLE_STREAM = 1
LEARNER_STREAM = 2
SKEW_STREAM = 3


def fmt(x) -> str:
    """Stable text for a float in data files (round-trips exactly)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def fmt_report(x, digits: int = 4) -> str:
    x = float(x)
    return "---" if math.isnan(x) else f"{x:.{digits}f}"


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


# ---------------------------------------------------------------------------
# Labeling


@dataclass
class LabeledDataset:
    """Per-image level runs and level-0 features for one corpus.

    ``dice[i, l]`` and ``time[i, l]`` come from segmenting image ``i`` at
    level ``l``; labels for any alpha are derived from them on demand.
    """

    names: List[str]
    index: np.ndarray  # manifest position of each row
    dice: np.ndarray
    time: np.ndarray
    features: np.ndarray
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def r(self) -> int:
        return self.dice.shape[1]

    def __len__(self) -> int:
        return len(self.names)

    def labels(self, alpha: float) -> np.ndarray:
        return np.array(
            [label_best_resolution(a, t, alpha).best_level for a, t in zip(self.dice, self.time)],
            dtype=np.int64,
        )

    def omegas(self, alpha: float) -> np.ndarray:
        return np.array([label_best_resolution(a, t, alpha).omegas for a, t in zip(self.dice, self.time)])

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(
            [self.names[i] for i in rows], self.index[rows], self.dice[rows],
            self.time[rows], self.features[rows], list(self.failures),
        )

    def write(self, out_dir, alpha: float) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "runs.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["image", "level", "dice", "time"])
            for name, acc, tm in zip(self.names, self.dice, self.time):
                for level in range(self.r):
                    w.writerow([name, level, fmt(acc[level]), fmt(tm[level])])
        labels = self.labels(alpha)
        omegas = self.omegas(alpha)
        with open(out / "labels.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["image", "best_level", *[f"omega_{i}" for i in range(self.r)], "alpha"])
            for name, lab, om in zip(self.names, labels, omegas):
                w.writerow([name, lab, *[fmt(o) for o in om], fmt(alpha)])
        write_features_csv(out / "features.csv", self.features, labels)
        with open(out / "failures.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["image", "error"])
            w.writerows(self.failures)

    @classmethod
    def read(cls, out_dir, corpus: Optional[Corpus] = None) -> "LabeledDataset":
        out = Path(out_dir)
        runs: Dict[str, Dict[int, Tuple[float, float]]] = {}
        order: List[str] = []
        with open(out / "runs.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                name = row["image"]
                if name not in runs:
                    runs[name] = {}
                    order.append(name)
                runs[name][int(row["level"])] = (float(row["dice"]), float(row["time"]))
        r = 1 + max(max(levels) for levels in runs.values())
        dice = np.array([[runs[n][l][0] for l in range(r)] for n in order])
        time = np.array([[runs[n][l][1] for l in range(r)] for n in order])
        features, _ = read_features_csv(out / "features.csv")
        if len(features) != len(order):
            raise ValueError(f"{out}: features.csv has {len(features)} rows, runs.csv {len(order)} images")
        if corpus is not None:
            pos = {e.name: i for i, e in enumerate(corpus.entries)}
            index = np.array([pos[n] for n in order], dtype=np.int64)
        else:
            index = np.arange(len(order), dtype=np.int64)
        failures = []
        if (out / "failures.csv").exists():
            with open(out / "failures.csv", newline="") as fh:
                failures = [(r_["image"], r_["error"]) for r_ in csv.DictReader(fh)]
        return cls(order, index, dice, time, features, failures)


def write_features_csv(path, features: np.ndarray, labels: Optional[Sequence[int]] = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"f{i}" for i in range(features.shape[1])]
        w.writerow(header + (["label"] if labels is not None else []))
        for i, row in enumerate(features):
            tail = [int(labels[i])] if labels is not None else []
            w.writerow([fmt(v) for v in row] + tail)


def read_features_csv(path) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    has_label = header[-1] == "label"
    n_feat = len(header) - int(has_label)
    X = np.array([[float(v) for v in row[:n_feat]] for row in rows]).reshape(len(rows), n_feat)
    y = np.array([int(row[-1]) for row in rows], dtype=np.int64) if has_label else None
    return X, y


def label_image(img, gold, cfg: ExperimentConfig, click=None):
    """Runs at every level plus the level-0 feature vector for one image."""
    pyr = build_pyramid(img, cfg.r)
    segmenter = cfg.make_segmenter()
    records = [segment_at_level(pyr, lv, segmenter, gold, click, cfg.tau, cfg.timing) for lv in range(cfg.r)]
    feats = extract_features(img, cfg.grid, cfg.bins)
    return records, feats


def label_corpus(corpus: Corpus, cfg: ExperimentConfig, out_dir=None, progress=None) -> LabeledDataset:
    """Segment every image at every level and derive best-resolution labels.

    Images that fail are listed in ``failures`` and left out.  With
    ``out_dir`` the dataset files are written there.
    """
    names, index, dice, time, feats, failures = [], [], [], [], [], []
    for i, entry in enumerate(corpus.entries):
        try:
            img, gold = corpus.load(i)
            records, f = label_image(img, gold, cfg, entry.click)
        except Exception as exc:  # per-image failures are reported, not fatal
            log.warning("skipping %s: %s", entry.image, exc)
            failures.append((entry.name, f"{type(exc).__name__}: {exc}"))
            continue
        names.append(entry.name)
        index.append(i)
        dice.append([rec.accuracy for rec in records])
        time.append([rec.time for rec in records])
        feats.append(f)
        if progress is not None:
            progress(i)
    if not names:
        raise RuntimeError("every image failed to label")
    ds = LabeledDataset(
        names, np.array(index, dtype=np.int64), np.array(dice), np.array(time), np.array(feats), failures
    )
    if out_dir is not None:
        ds.write(out_dir, cfg.alpha)
    return ds


# ---------------------------------------------------------------------------
# Learning


def train_learner(name: str, X, y, cfg: ExperimentConfig, n_classes: int, seed_seq) -> BoostModel:
    tree_cfg = cfg.tree_config()
    if name == "adaboost":
        return adaboost_train(X, y, cfg.n_rounds, n_classes=n_classes, tree_config=tree_cfg)
    if name == "ramoboost":
        cfgr = cfg.ramo_config()
        # k must stay below the fold size on tiny corpora
        kmax = max(1, len(y) - 1)
        cfgr = type(cfgr)(min(cfgr.k1, kmax), min(cfgr.k2, kmax), cfgr.n_syn_per_round)
        return ramoboost_train(
            X, y, cfg.n_rounds, cfgr, seed=np.random.default_rng(seed_seq),
            n_classes=n_classes, tree_config=tree_cfg,
        )
    if name == "adasyn":
        Xa, ya = adasyn_sample(X, y, cfg.adasyn_beta, cfg.adasyn_k, np.random.default_rng(seed_seq))
        model = adaboost_train(Xa, ya, cfg.n_rounds, n_classes=n_classes, tree_config=tree_cfg)
        model.algorithm = "adasyn"
        return model
    raise ValueError(f"unknown learner {name!r}")


def fold_partition(n: int, folds: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Shuffle ``range(n)`` and cut it into ``folds`` near-equal test sets."""
    if folds > n:
        raise ValueError(f"{folds} folds need at least {folds} images, got {n}")
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


@dataclass
class ExperimentResult:
    cfg: ExperimentConfig
    learners: Tuple[str, ...]
    labels: np.ndarray
    n_classes: int
    # (learner, repeat) -> confusion matrix pooled over folds
    confusions: Dict[Tuple[str, int], np.ndarray]
    # rows: learner, repeat, fold, image, actual, predicted, peak
    predictions: List[tuple]
    impact: Dict[str, Dict[str, float]]
    selection: Dict[str, Tuple[float, float]]

    def f1(self, learner: str, repeat: int) -> np.ndarray:
        return classification_metrics(self.confusions[(learner, repeat)]).f1

    def near_miss_fraction(self, learner: str, repeat: int) -> float:
        """Share of misclassified test rows predicted one level from the truth."""
        rows = [p for p in self.predictions if p[0] == learner and p[1] == repeat and p[4] != p[5]]
        if not rows:
            return float("nan")
        return sum(abs(p[4] - p[5]) <= 1 for p in rows) / len(rows)


def cross_validate(
    ds: LabeledDataset, cfg: ExperimentConfig, corpus: Optional[Corpus] = None,
    labels: Optional[np.ndarray] = None, features: Optional[np.ndarray] = None,
) -> ExperimentResult:
    """Repeated k-fold evaluation of every configured learner.

    Each held-out image is scored at its predicted level.  In cost mode the
    labeling runs are reused; in wall mode with a corpus the image is
    segmented again so the time is a real inference cost.
    """
    y = ds.labels(cfg.alpha) if labels is None else np.asarray(labels, dtype=np.int64)
    X = ds.features if features is None else np.asarray(features, dtype=np.float64)
    n, r = len(y), ds.r
    learners = tuple(cfg.learners)
    confusions: Dict[Tuple[str, int], np.ndarray] = {}
    predictions: List[tuple] = []
    acc = {name: {k: [] for k in RESOLUTIONS} for name in learners}
    tim = {name: {k: [] for k in RESOLUTIONS} for name in learners}
    resegment = cfg.timing == "wall" and corpus is not None
    for rep in range(cfg.repeats):
        parts = fold_partition(n, cfg.folds, substream(cfg.seed, SHUFFLE_STREAM, rep))
        for name in learners:
            confusions[(name, rep)] = np.zeros((r, r), dtype=np.int64)
        for k, test in enumerate(parts):
            train = np.setdiff1d(np.arange(n), test)
            if len(np.unique(y[train])) < 2:
                raise RuntimeError(f"repeat {rep} fold {k}: training labels hold a single class")
            peak = peak_level(y[train], r)
            for j, name in enumerate(learners):
                seq = np.random.SeedSequence(cfg.seed, spawn_key=(LEARNER_STREAM, rep, k, j))
                try:
                    model = train_learner(name, X[train], y[train], cfg, r, seq)
                except Exception as exc:
                    raise RuntimeError(f"repeat {rep} fold {k} learner {name}: {exc}") from exc
                pred = model.predict(X[test])
                confusions[(name, rep)] += confusion_matrix(y[test], pred, r)
                for i, p in zip(test, pred):
                    predictions.append((name, rep, k, ds.names[i], int(y[i]), int(p), peak))
                    est_acc, est_time = ds.dice[i, p], ds.time[i, p]
                    if resegment:
                        est_acc, est_time = _resegment(corpus, int(ds.index[i]), int(p), cfg)
                    levels = {"orig": 0, "min": r - 1, "peak": peak, "sel": int(y[i])}
                    acc[name]["est"].append(est_acc)
                    tim[name]["est"].append(est_time)
                    for key, lv in levels.items():
                        acc[name][key].append(ds.dice[i, lv])
                        tim[name][key].append(ds.time[i, lv])
    impact = {name: impact_ratios(acc[name], tim[name]) for name in learners}
    selection = selection_table(ds, y)
    return ExperimentResult(cfg, learners, y, r, confusions, predictions, impact, selection)


def _resegment(corpus: Corpus, i: int, level: int, cfg: ExperimentConfig):
    img, gold = corpus.load(i)
    pyr = build_pyramid(img, cfg.r)
    rec = segment_at_level(pyr, level, cfg.make_segmenter(), gold, corpus.entries[i].click, cfg.tau, cfg.timing)
    return rec.accuracy, rec.time


def selection_table(ds: LabeledDataset, y: np.ndarray) -> Dict[str, Tuple[float, float]]:
    """Mean accuracy and time when every image uses the selected, peak,
    original or minimum resolution (peak is the dataset-wide mode)."""
    rows = np.arange(len(y))
    peak = peak_level(y, ds.r)
    choice = {"sel": y, "peak": np.full(len(y), peak), "orig": np.zeros(len(y), dtype=np.int64),
              "min": np.full(len(y), ds.r - 1)}
    return {k: (float(ds.dice[rows, c].mean()), float(ds.time[rows, c].mean())) for k, c in choice.items()}


def skewed_subset(ds: LabeledDataset, labels: np.ndarray, ratio: int = 10, seed: int = 42):
    """Two-class variant with a forced ``ratio``:1 imbalance.

    Keeps every image of the most frequent label and a seeded random
    ``ceil(n_major / ratio)`` images of the second most frequent one.
    Returns ``(dataset, labels, minority_label)``.
    """
    counts = np.bincount(labels, minlength=ds.r)
    order = sorted(range(ds.r), key=lambda c: (-counts[c], -c))
    major, minor = order[0], order[1]
    need = math.ceil(counts[major] / ratio)
    if counts[minor] < need:
        raise ValueError(f"label {minor} has {counts[minor]} images, {need} needed")
    rng = substream(seed, SKEW_STREAM)
    keep_minor = np.sort(rng.choice(np.flatnonzero(labels == minor), size=need, replace=False))
    rows = np.sort(np.concatenate([np.flatnonzero(labels == major), keep_minor]))
    return ds.subset(rows), labels[rows], minor


# ---------------------------------------------------------------------------
# Report files

REPORT_FILES = ("f1.csv", "confusion.csv", "selection.csv", "impact.csv", "predictions.csv", "metrics.csv")


def write_report(result: ExperimentResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    r = result.n_classes
    reps = range(result.cfg.repeats)

    with open(out / "f1.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["learner", "class", "precision", "recall", "f1", "support"])
        for name in result.learners:
            reports = [classification_metrics(result.confusions[(name, k)]) for k in reps]
            support = np.bincount(result.labels, minlength=r)
            for c in range(r):
                vals = [np.nanmean([getattr(rep, m)[c] for rep in reports]) if support[c] else np.nan
                        for m in ("precision", "recall", "f1")]
                w.writerow([name, c, *[fmt_report(v) for v in vals], int(support[c])])

    with open(out / "confusion.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["learner", "stat", "actual", *[f"pred_{c}" for c in range(r)]])
        for name in result.learners:
            summary = aggregate_confusions([result.confusions[(name, k)] for k in reps])
            for stat, mat in (("mean", summary.mean), ("std", summary.std)):
                for c in range(r):
                    w.writerow([name, stat, c, *[fmt_report(v, 2) for v in mat[c]]])

    with open(out / "selection.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["resolution", "accuracy", "time"])
        for key in ("sel", "peak", "orig", "min"):
            a, t = result.selection[key]
            w.writerow([key, fmt_report(a), fmt_report(t, 1)])

    with open(out / "impact.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = [k for k in next(iter(result.impact.values())) if not k.endswith("_dropped")]
        w.writerow(["learner", *keys, "dropped"])
        for name in result.learners:
            imp = result.impact[name]
            dropped = sum(int(v) for k, v in imp.items() if k.endswith("_dropped"))
            w.writerow([name, *[fmt_report(imp[k]) for k in keys], dropped])

    with open(out / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["learner", "repeat", "fold", "image", "actual", "predicted", "peak"])
        w.writerows(result.predictions)

    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["learner", "repeat", "accuracy", "g_mean", "near_miss", *[f"f1_{c}" for c in range(r)]])
        for name in result.learners:
            for k in reps:
                rep = classification_metrics(result.confusions[(name, k)])
                w.writerow([name, k, fmt_report(rep.accuracy), fmt_report(rep.g_mean),
                            fmt_report(result.near_miss_fraction(name, k)),
                            *[fmt_report(v) for v in rep.f1]])

    from .report import render_report

    (out / "summary.txt").write_text(render_report(out))


def run_experiment(
    cfg: ExperimentConfig, corpus: Optional[Corpus] = None, labeled_dir=None, out_dir=None,
) -> Tuple[ExperimentResult, LabeledDataset]:
    """Label (unless ``labeled_dir`` already holds runs), cross-validate, report."""
    if labeled_dir is not None and (Path(labeled_dir) / "runs.csv").exists():
        ds = LabeledDataset.read(labeled_dir, corpus)
    else:
        if corpus is None:
            raise ValueError("a corpus or a labeled directory is required")
        ds = label_corpus(corpus, cfg, labeled_dir)
    if ds.r != cfg.r:
        raise ValueError(f"labeled runs cover {ds.r} levels, config says r={cfg.r}")
    result = cross_validate(ds, cfg, corpus)
    if out_dir is not None:
        write_report(result, out_dir)
    return result, ds


def train_model(ds: LabeledDataset, cfg: ExperimentConfig) -> BoostModel:
    y = ds.labels(cfg.alpha)
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(LEARNER_STREAM,))
    return train_learner(cfg.learner, ds.features, y, cfg, cfg.r, seq)


# ---------------------------------------------------------------------------
# Inference


class FeatureMismatchError(ValueError):
    pass


def infer(model: BoostModel, image_path, cfg: ExperimentConfig, out_dir=None, click=None) -> dict:
    """Predict the level for one image, segment there, optionally write the mask."""
    img = load_image(image_path)
    feats = extract_features(img, cfg.grid, cfg.bins)
    if len(feats) != model.n_features:
        raise FeatureMismatchError(
            f"model expects {model.n_features} features, config yields {len(feats)} "
            f"(grid {cfg.grid[0]}x{cfg.grid[1]}, {cfg.bins} bins)"
        )
    if model.n_classes > cfg.r:
        raise FeatureMismatchError(f"model predicts {model.n_classes} levels, config has r={cfg.r}")
    level = int(model.predict(feats[None, :])[0])
    pyr = build_pyramid(img, cfg.r)
    mask, elapsed = run_at_level(pyr, level, cfg.make_segmenter(), click, cfg.tau, cfg.timing)
    record = {"image": str(image_path), "level": level, "time": elapsed, "timing": cfg.timing,
              "pixels": int(mask.sum())}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        mask_path = out / f"{Path(image_path).stem}_mask.png"
        save_mask(mask_path, mask)
        record["mask"] = str(mask_path)
        with open(out / "results.jsonl", "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    record["_mask"] = mask
    return record
