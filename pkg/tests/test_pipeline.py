import csv
from pathlib import Path

import numpy as np
import pytest

from resolve_seg.config import ExperimentConfig
from resolve_seg.corpus import generate_synthetic_corpus
from resolve_seg.features import extract_features
from resolve_seg.imagefile import load_image, load_mask
from resolve_seg.imaging import build_pyramid
from resolve_seg.learn.boost import BoostModel
from resolve_seg.learn.tree import DecisionTree
from resolve_seg.pipeline import (
    REPORT_FILES,
    FeatureMismatchError,
    LabeledDataset,
    cross_validate,
    fold_partition,
    infer,
    label_corpus,
    run_experiment,
    skewed_subset,
    train_model,
    write_report,
)
from resolve_seg.segment import ChanVese

GOLDEN = Path(__file__).parent / "data" / "golden_labels_mini.csv"
SMALL = ExperimentConfig(r=4, folds=3, repeats=2, n_rounds=5)


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    root = tmp_path_factory.mktemp("small")
    corpus = generate_synthetic_corpus(root / "corpus", 24, (64, 64), seed=3)
    ds = label_corpus(corpus, SMALL, root / "labels")
    return corpus, ds, root


def constant_model(level, n_classes, n_features):
    probs = np.eye(n_classes)[level]
    tree = DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                        probs[None, :], n_features)
    return BoostModel("adaboost", n_classes, n_features, [tree], [1.0])


def test_label_files(small):
    corpus, ds, root = small
    lab = root / "labels"
    runs = list(csv.DictReader(open(lab / "runs.csv")))
    assert len(runs) == 24 * 4
    assert list(runs[0]) == ["image", "level", "dice", "time"]
    labels = list(csv.DictReader(open(lab / "labels.csv")))
    assert list(labels[0]) == ["image", "best_level", "omega_0", "omega_1", "omega_2", "omega_3", "alpha"]
    header = open(lab / "features.csv").readline().strip().split(",")
    assert header[0] == "f0" and header[-2] == "f159" and header[-1] == "label"
    assert [r["image"] for r in labels] == [e.name for e in corpus.entries]


def test_dataset_reads_back(small):
    corpus, ds, root = small
    back = LabeledDataset.read(root / "labels", corpus)
    np.testing.assert_array_equal(back.dice, ds.dice)
    np.testing.assert_array_equal(back.time, ds.time)
    np.testing.assert_array_equal(back.features, ds.features)
    assert back.names == ds.names


def test_single_level_labels_all_zero(small):
    corpus, _, _ = small
    ds = label_corpus(corpus, SMALL.replace(r=1))
    assert np.all(ds.labels(0.5) == 0)


def test_alpha_zero_picks_fastest_level(small):
    _, ds, _ = small
    t = ds.time
    fastest = np.array([len(row) - 1 - np.argmin(row[::-1]) for row in t])
    np.testing.assert_array_equal(ds.labels(0.0), fastest)


def test_mini_corpus_labels_match_golden_file(tmp_path):
    corpus = generate_synthetic_corpus(tmp_path / "c", 20, (64, 64), seed=7)
    label_corpus(corpus, ExperimentConfig(r=4, alpha=0.5, timing="cost"), tmp_path / "lab")
    assert (tmp_path / "lab" / "labels.csv").read_bytes() == GOLDEN.read_bytes()


def test_failed_images_are_enumerated(small, tmp_path):
    corpus = generate_synthetic_corpus(tmp_path / "c", 3, (64, 64), seed=1)
    (tmp_path / "c" / corpus.entries[1].mask).write_bytes(b"P2 1 1 255 0")
    ds = label_corpus(corpus, SMALL, tmp_path / "lab")
    assert len(ds) == 2
    assert [f[0] for f in ds.failures] == [corpus.entries[1].name]
    assert "failures.csv" in {p.name for p in (tmp_path / "lab").iterdir()}


def test_fold_partition_disjoint_cover():
    parts = fold_partition(23, 5, np.random.default_rng(0))
    joined = np.concatenate(parts)
    assert sorted(joined.tolist()) == list(range(23))
    assert {len(p) for p in parts} <= {4, 5}
    with pytest.raises(ValueError):
        fold_partition(3, 5, np.random.default_rng(0))


def test_report_structure(small, tmp_path):
    corpus, ds, _ = small
    cfg = SMALL.replace(folds=2, repeats=1)
    result = cross_validate(ds, cfg, corpus)
    write_report(result, tmp_path)
    for name in REPORT_FILES + ("summary.txt",):
        assert (tmp_path / name).exists()
    rows = lambda f: list(csv.DictReader(open(tmp_path / f)))
    assert len(rows("f1.csv")) == 2 * 4
    assert len(rows("confusion.csv")) == 2 * 2 * 4
    assert len(rows("selection.csv")) == 4
    assert len(rows("impact.csv")) == 2
    assert len(rows("predictions.csv")) == 2 * 24
    assert len(rows("metrics.csv")) == 2
    # every prediction row names a manifest entry, each once per learner and repeat
    names = sorted(r["image"] for r in rows("predictions.csv") if r["learner"] == "adaboost")
    assert names == sorted(e.name for e in corpus.entries)


def test_oracle_feature_gives_unit_selection_ratio(small):
    _, ds, _ = small
    y = ds.labels(0.5)
    # leave-one-out keeps every class in every training fold
    cfg = SMALL.replace(learners=("adaboost",), folds=len(ds), repeats=1)
    result = cross_validate(ds, cfg, features=y[:, None].astype(float))
    assert result.impact["adaboost"]["acc_est/sel"] == pytest.approx(1.0, abs=1e-12)
    assert result.impact["adaboost"]["time_sel/est"] == pytest.approx(1.0, abs=1e-12)


def test_run_experiment_reuses_labels(small, tmp_path):
    corpus, ds, root = small
    result, back = run_experiment(SMALL, corpus, root / "labels", tmp_path / "out")
    np.testing.assert_array_equal(back.dice, ds.dice)
    assert (tmp_path / "out" / "summary.txt").read_text().startswith("Per-class F1")
    with pytest.raises(ValueError):
        run_experiment(SMALL.replace(r=3), corpus, root / "labels")


def test_reports_are_deterministic(small, tmp_path):
    corpus, ds, _ = small
    for sub in ("a", "b"):
        write_report(cross_validate(ds, SMALL, corpus), tmp_path / sub)
    for name in REPORT_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_wall_mode_resegments(small):
    corpus, ds, _ = small
    cfg = SMALL.replace(timing="wall", folds=2, repeats=1, learners=("adaboost",))
    result = cross_validate(ds, cfg, corpus)
    assert len(result.predictions) == len(ds)


def test_skewed_subset(small):
    _, ds, _ = small
    y = ds.labels(0.5)
    sub, ys, minor = skewed_subset(ds, y, ratio=7)
    counts = np.bincount(ys)
    major = int(np.argmax(counts))
    assert len(np.unique(ys)) == 2
    assert counts[minor] == int(np.ceil(counts[major] / 7))
    assert len(sub) == len(ys)
    with pytest.raises(ValueError):
        skewed_subset(ds, y, ratio=2)


def test_infer_level_range_and_mask(small, tmp_path):
    corpus, ds, _ = small
    model = train_model(ds, SMALL)
    rec = infer(model, corpus.image_path(0), SMALL, tmp_path)
    assert 0 <= rec["level"] < SMALL.r
    mask = load_mask(rec["mask"])
    np.testing.assert_array_equal(mask, rec["_mask"])
    assert (tmp_path / "results.jsonl").read_text().count("\n") == 1


def test_infer_reproduces_training_labels_on_held_in_probe(small):
    corpus, ds, _ = small
    model = train_model(ds, SMALL)
    y = ds.labels(SMALL.alpha)
    probe = np.flatnonzero(model.predict(ds.features) == y)
    assert len(probe) > 0
    for i in probe[:6]:
        assert infer(model, corpus.image_path(int(ds.index[i])), SMALL)["level"] == y[i]


def test_level_zero_inference_is_plain_segmentation(small):
    corpus, _, _ = small
    model = constant_model(0, 4, 160)
    rec = infer(model, corpus.image_path(2), SMALL)
    assert rec["level"] == 0
    img = load_image(corpus.image_path(2))
    np.testing.assert_array_equal(rec["_mask"], ChanVese(SMALL.chan_vese()).segment(img))


def test_infer_feature_mismatch(small):
    corpus, _, _ = small
    with pytest.raises(FeatureMismatchError):
        infer(constant_model(0, 4, 99), corpus.image_path(0), SMALL)
    with pytest.raises(FeatureMismatchError):
        infer(constant_model(0, 8, 160), corpus.image_path(0), SMALL)
