"""Aligned plain-text tables built from the report CSVs."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Sequence

SVM_SLOTS = ("svm", "jmi+svm")  # comparison columns kept empty; those learners are not implemented


def format_table(headers: Sequence[str], rows: Sequence[Sequence], title: str = "") -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    def line(r):
        first = r[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()
    rule = "-" * len(line(cells[0]))
    out = [title] if title else []
    out += [line(cells[0]), rule, *(line(r) for r in cells[1:])]
    return "\n".join(out)


def _read(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_report(out_dir) -> str:
    out = Path(out_dir)
    blocks = []

    f1 = _read(out / "f1.csv")
    learners = list(dict.fromkeys(r["learner"] for r in f1))
    classes = list(dict.fromkeys(r["class"] for r in f1))
    by = {(r["learner"], r["class"]): r for r in f1}
    rows = [[c, by[(learners[0], c)]["support"], *[by[(n, c)]["f1"] for n in learners], *["---"] * len(SVM_SLOTS)]
            for c in classes]
    blocks.append(format_table(["level", "n", *learners, *SVM_SLOTS], rows, "Per-class F1 (mean over repeats)"))

    conf = _read(out / "confusion.csv")
    for name in learners:
        mean = [r for r in conf if r["learner"] == name and r["stat"] == "mean"]
        std = {r["actual"]: r for r in conf if r["learner"] == name and r["stat"] == "std"}
        preds = [k for k in mean[0] if k.startswith("pred_")]
        rows = []
        for r in mean:
            s = std[r["actual"]]
            rows.append([r["actual"], *[f"{round(float(r[k]) + 1e-9):d}+-{round(float(s[k]) + 1e-9):d}" for k in preds]])
        blocks.append(format_table(["actual", *[p[5:] for p in preds]], rows, f"Confusion matrix, {name} (mean+-std)"))

    sel = _read(out / "selection.csv")
    blocks.append(format_table(
        ["resolution", "accuracy", "time"], [[r["resolution"], r["accuracy"], r["time"]] for r in sel],
        "Accuracy and time per resolution choice",
    ))

    imp = _read(out / "impact.csv")
    keys = [k for k in imp[0] if k not in ("learner", "dropped")]
    blocks.append(format_table(
        ["learner", *keys, "dropped"], [[r["learner"], *[r[k] for k in keys], r["dropped"]] for r in imp],
        "Impact of the estimated resolution (mean of per-image ratios)",
    ))

    met = _read(out / "metrics.csv")
    rows = []
    for name in learners:
        mine = [r for r in met if r["learner"] == name]
        def avg(key):
            vals = [float(r[key]) for r in mine if r[key] != "---"]
            return f"{sum(vals) / len(vals):.4f}" if vals else "---"
        rows.append([name, avg("accuracy"), avg("g_mean"), avg("near_miss")])
    blocks.append(format_table(["learner", "accuracy", "g_mean", "near_miss"], rows, "Overall (mean over repeats)"))
    return "\n\n".join(blocks) + "\n"
