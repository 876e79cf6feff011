"""``resolve-seg`` command line.

Exit codes: 0 success, 2 when some images failed but the run completed,
1 on any fatal error (including usage errors).
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import ExperimentConfig, load_config
from .corpus import Corpus, generate_synthetic_corpus
from .learn.boost import BoostModel
from .pipeline import (
    LabeledDataset,
    cross_validate,
    infer,
    label_corpus,
    train_model,
    write_report,
)
from .report import render_report

EXIT_PARTIAL = 2


class PartialFailure(Exception):
    def __init__(self, n: int):
        super().__init__(f"{n} image(s) failed; see failures.csv")
        self.n = n


def _common(f):
    f = click.option("--out", "out", type=click.Path(file_okay=False), default="out", show_default=True,
                     help="Output directory.")(f)
    f = click.option("--timing", type=click.Choice(["wall", "cost"]), default=None,
                     help="Wall-clock seconds or deterministic cost units.")(f)
    f = click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=None,
                     help="Accuracy weight of the trade-off measure.")(f)
    f = click.option("--seed", type=int, default=None)(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Flat key = value configuration file.")(f)
    return f


def _config(config_path, seed, alpha, timing) -> ExperimentConfig:
    return load_config(config_path).replace(seed=seed, alpha=alpha, timing=timing)


def _dataset(labels_dir, corpus_dir, cfg, out):
    corpus = Corpus.open(corpus_dir) if corpus_dir else None
    if labels_dir:
        return LabeledDataset.read(labels_dir, corpus), corpus
    if corpus is None:
        raise click.UsageError("give --labels or --corpus")
    return label_corpus(corpus, cfg, out), corpus


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def cli(verbose):
    """Resolution-aware segmentation: label, learn and apply the best pyramid level."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@click.option("--n", "n", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--size", default="256x256", show_default=True, help="HEIGHTxWIDTH or a single side.")
@_common
def gen(n, size, config_path, seed, alpha, timing, out):
    """Write a synthetic blob corpus with gold masks."""
    cfg = _config(config_path, seed, alpha, timing)
    parts = size.lower().split("x")
    try:
        shape = (int(parts[0]), int(parts[-1]))
    except ValueError:
        raise click.BadParameter(f"bad size {size!r}") from None
    corpus = generate_synthetic_corpus(out, n, shape, cfg.seed)
    click.echo(f"wrote {len(corpus)} images to {out}")


@cli.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), required=True)
@_common
def label(corpus_dir, config_path, seed, alpha, timing, out):
    """Segment every image at every level; write runs, labels and features."""
    cfg = _config(config_path, seed, alpha, timing)
    ds = label_corpus(Corpus.open(corpus_dir), cfg, out)
    Path(out, "config.txt").write_text(cfg.to_text())
    counts = ", ".join(f"{lv}:{int((ds.labels(cfg.alpha) == lv).sum())}" for lv in range(cfg.r))
    click.echo(f"labeled {len(ds)} images (level counts {counts})")
    if ds.failures:
        raise PartialFailure(len(ds.failures))


@cli.command()
@click.option("--labels", "labels_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory written by `label`.")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), default=None)
@_common
def train(labels_dir, corpus_dir, config_path, seed, alpha, timing, out):
    """Train the configured learner on a labeled corpus; writes model.json."""
    cfg = _config(config_path, seed, alpha, timing)
    ds, _ = _dataset(labels_dir, corpus_dir, cfg, out)
    model = train_model(ds, cfg)
    Path(out).mkdir(parents=True, exist_ok=True)
    model.save(Path(out) / "model.json")
    click.echo(f"trained {model.algorithm} with {model.n_rounds} rounds -> {Path(out) / 'model.json'}")


@cli.command(name="eval")
@click.option("--labels", "labels_dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Needed for wall-clock re-segmentation or when no labels exist yet.")
@_common
def evaluate(labels_dir, corpus_dir, config_path, seed, alpha, timing, out):
    """Repeated k-fold evaluation; writes report CSVs and summary.txt."""
    cfg = _config(config_path, seed, alpha, timing)
    ds, corpus = _dataset(labels_dir, corpus_dir, cfg, out)
    if ds.r != cfg.r:
        raise click.UsageError(f"labels cover {ds.r} levels, config has r={cfg.r}")
    result = cross_validate(ds, cfg, corpus)
    write_report(result, out)
    click.echo((Path(out) / "summary.txt").read_text(), nl=False)
    if ds.failures:
        raise PartialFailure(len(ds.failures))


@cli.command(name="infer")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--click", "click_xy", default=None, help="Object seed as X,Y.")
@_common
def infer_cmd(model_path, image_path, click_xy, config_path, seed, alpha, timing, out):
    """Pick a level for one image, segment it and write the mask."""
    cfg = _config(config_path, seed, alpha, timing)
    seed_xy = None
    if click_xy:
        try:
            x, y = (int(v) for v in click_xy.split(","))
        except ValueError:
            raise click.BadParameter(f"--click must be X,Y, got {click_xy!r}") from None
        seed_xy = (x, y)
    record = infer(BoostModel.load(model_path), image_path, cfg, out, seed_xy)
    record.pop("_mask")
    click.echo(json.dumps(record, sort_keys=True))


@cli.command()
@click.option("--out", "out", type=click.Path(exists=True, file_okay=False), default="out", show_default=True)
def report(out):
    """Print the text tables for an `eval` output directory."""
    text = render_report(out)
    Path(out, "summary.txt").write_text(text)
    click.echo(text, nl=False)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="resolve-seg", standalone_mode=False)
    except PartialFailure as exc:
        click.echo(f"warning: {exc}", err=True)
        return EXIT_PARTIAL
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except Exception as exc:  # fatal
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())
