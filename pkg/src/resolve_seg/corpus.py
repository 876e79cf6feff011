"""Corpus manifests: ``images/``, ``masks/`` and ``manifest.csv`` under one root."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .imagefile import load_image, load_mask, save_image, save_mask
from .synth import synth_image

MANIFEST = "manifest.csv"
MANIFEST_FIELDS = ("image", "mask", "click_x", "click_y")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    image: str  # path relative to the corpus root
    mask: str
    click: Optional[Tuple[int, int]] = None

    @property
    def name(self) -> str:
        return Path(self.image).stem


@dataclass(frozen=True)
class Corpus:
    root: Path
    entries: Tuple[CorpusEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def image_path(self, i: int) -> Path:
        return self.root / self.entries[i].image

    def mask_path(self, i: int) -> Path:
        return self.root / self.entries[i].mask

    def load(self, i: int):
        """``(image, gold_mask)`` for entry ``i``; shapes must agree."""
        img = load_image(self.image_path(i))
        gold = load_mask(self.mask_path(i))
        if img.shape != gold.shape:
            raise CorpusError(
                f"{self.entries[i].image}: gold mask is {gold.shape[::-1]}, image is {img.shape[::-1]}"
            )
        return img, gold

    @classmethod
    def open(cls, root) -> "Corpus":
        root = Path(root)
        path = root / MANIFEST
        if not path.exists():
            raise CorpusError(f"no {MANIFEST} in {root}")
        entries = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"image", "mask"} - set(reader.fieldnames or ())
            if missing:
                raise CorpusError(f"{path}: missing columns {sorted(missing)}")
            for lineno, row in enumerate(reader, start=2):
                cx, cy = (row.get("click_x") or "").strip(), (row.get("click_y") or "").strip()
                click = None
                if cx or cy:
                    try:
                        click = (int(cx), int(cy))
                    except ValueError:
                        raise CorpusError(f"{path}:{lineno}: bad click ({cx!r}, {cy!r})") from None
                entries.append(CorpusEntry(row["image"], row["mask"], click))
        if not entries:
            raise CorpusError(f"{path} lists no images")
        return cls(root, tuple(entries))

    def write_manifest(self) -> None:
        with open(self.root / MANIFEST, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(MANIFEST_FIELDS)
            for e in self.entries:
                cx, cy = e.click if e.click is not None else ("", "")
                writer.writerow([e.image, e.mask, cx, cy])


def generate_synthetic_corpus(
    out_dir, n: int, size: Tuple[int, int] = (256, 256), seed: int = 42
) -> Corpus:
    """Render ``n`` synthetic scenes to ``out_dir`` as PGM files plus manifest.

    Scene parameters go to ``scenes.jsonl`` alongside the manifest.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    root = Path(out_dir)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    entries: List[CorpusEntry] = []
    with open(root / "scenes.jsonl", "w") as log:
        for i in range(n):
            img, gold, scene = synth_image(seed, i, size)
            name = f"img_{i:05d}"
            save_image(root / "images" / f"{name}.pgm", img)
            save_mask(root / "masks" / f"{name}.pgm", gold)
            entries.append(CorpusEntry(f"images/{name}.pgm", f"masks/{name}.pgm"))
            log.write(json.dumps({"image": name, **scene.to_dict()}, sort_keys=True) + "\n")
    corpus = Corpus(root, tuple(entries))
    corpus.write_manifest()
    return corpus
