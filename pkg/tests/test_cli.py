import json

import pytest
from click.testing import CliRunner

from resolve_seg.cli import cli, main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "exp.txt"
    cfg.write_text("r = 3\nfolds = 2\nrepeats = 1\nn_rounds = 3\n")
    assert main(["gen", "--n", "10", "--size", "48", "--seed", "5", "--out", str(root / "corpus")]) == 0
    assert main(["label", "--corpus", str(root / "corpus"), "--config", str(cfg), "--out", str(root / "lab")]) == 0
    return root, cfg


def test_help_lists_subcommands():
    result = CliRunner().invoke(cli, ["--help"])
    assert result.exit_code == 0
    for name in ("gen", "label", "train", "eval", "infer", "report"):
        assert name in result.output


def test_label_outputs(workspace):
    root, _ = workspace
    for name in ("runs.csv", "labels.csv", "features.csv", "failures.csv", "config.txt"):
        assert (root / "lab" / name).exists()


def test_eval_and_report(workspace, capsys):
    root, cfg = workspace
    out = root / "eval"
    assert main(["eval", "--labels", str(root / "lab"), "--config", str(cfg), "--out", str(out)]) == 0
    assert "Impact of the estimated resolution" in capsys.readouterr().out
    assert main(["report", "--out", str(out)]) == 0
    assert "Per-class F1" in capsys.readouterr().out


def test_train_and_infer(workspace, capsys):
    root, cfg = workspace
    assert main(["train", "--labels", str(root / "lab"), "--config", str(cfg), "--out", str(root / "m")]) == 0
    capsys.readouterr()
    image = root / "corpus" / "images" / "img_00000.pgm"
    code = main(["infer", "--model", str(root / "m" / "model.json"), "--image", str(image),
                 "--config", str(cfg), "--out", str(root / "inf"), "--click", "20,20"])
    assert code == 0
    record = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert 0 <= record["level"] < 3
    assert (root / "inf" / "img_00000_mask.png").exists()


def test_infer_feature_mismatch_is_fatal(workspace):
    root, cfg = workspace
    bad = root / "bad.txt"
    bad.write_text("r = 3\ngrid = 2x2\n")
    image = root / "corpus" / "images" / "img_00000.pgm"
    model = root / "m" / "model.json"
    if not model.exists():
        main(["train", "--labels", str(root / "lab"), "--config", str(workspace[1]), "--out", str(root / "m")])
    assert main(["infer", "--model", str(model), "--image", str(image), "--config", str(bad)]) == 1


def test_partial_failure_exit_code(workspace, tmp_path):
    root, cfg = workspace
    corpus = tmp_path / "c"
    assert main(["gen", "--n", "3", "--size", "48", "--out", str(corpus)]) == 0
    (corpus / "masks" / "img_00001.pgm").write_bytes(b"garbage")
    code = main(["label", "--corpus", str(corpus), "--config", str(cfg), "--out", str(tmp_path / "lab")])
    assert code == 2
    assert "img_00001" in (tmp_path / "lab" / "failures.csv").read_text()


def test_fatal_and_usage_errors(tmp_path):
    assert main(["label", "--corpus", str(tmp_path), "--out", str(tmp_path / "o")]) == 1
    assert main(["eval", "--out", str(tmp_path / "o")]) == 1
    assert main(["nosuch"]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("folds = 1\n")
    assert main(["gen", "--config", str(bad), "--out", str(tmp_path / "g")]) == 1


def test_flags_override_config(workspace, tmp_path):
    root, cfg = workspace
    out = tmp_path / "lab"
    assert main(["label", "--corpus", str(root / "corpus"), "--config", str(cfg), "--alpha", "0.9",
                 "--seed", "3", "--out", str(out)]) == 0
    text = (out / "config.txt").read_text()
    assert "alpha = 0.9" in text and "seed = 3" in text and "r = 3" in text
