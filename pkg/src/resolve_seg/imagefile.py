"""Read and write PGM (P2/P5) and 8-bit grayscale PNG files."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .imaging import as_gray, as_mask


class FormatError(ValueError):
    """Malformed image file; ``offset`` is the byte position of the problem."""

    def __init__(self, path, offset: int, msg: str):
        super().__init__(f"{path}: byte {offset}: {msg}")
        self.path = str(path)
        self.offset = offset


_WS = b" \t\r\n\v\f"


def _next_token(buf: bytes, pos: int, path) -> tuple:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WS:
            pos += 1
        else:
            break
    if pos >= n:
        raise FormatError(path, pos, "unexpected end of file in header")
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WS and buf[pos : pos + 1] != b"#":
        pos += 1
    return buf[start:pos], start, pos


def _header_int(buf, pos, path, what):
    tok, start, pos = _next_token(buf, pos, path)
    try:
        val = int(tok)
    except ValueError:
        raise FormatError(path, start, f"expected integer {what}, got {tok[:16]!r}") from None
    if val <= 0:
        raise FormatError(path, start, f"{what} must be positive, got {val}")
    return val, pos


def read_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:2] not in (b"P2", b"P5"):
        raise FormatError(path, 0, f"not a P2/P5 PGM (magic {buf[:2]!r})")
    binary = buf[:2] == b"P5"
    pos = 2
    w, pos = _header_int(buf, pos, path, "width")
    h, pos = _header_int(buf, pos, path, "height")
    maxval, pos = _header_int(buf, pos, path, "maxval")
    if maxval > 65535:
        raise FormatError(path, pos, f"maxval {maxval} exceeds 65535")
    count = w * h
    if binary:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(buf) - pos < need:
            raise FormatError(path, len(buf), f"truncated raster: need {need} bytes after offset {pos}")
        data = np.frombuffer(buf, dtype=dtype, count=count, offset=pos).astype(np.float64)
        starts = pos + dtype.itemsize * np.arange(count)
    else:
        vals, starts = [], []
        for _ in range(count):
            tok, start, pos = _next_token(buf, pos, path)
            try:
                vals.append(int(tok))
            except ValueError:
                raise FormatError(path, start, f"bad sample {tok[:16]!r}") from None
            starts.append(start)
        data = np.asarray(vals, dtype=np.float64)
    over = np.flatnonzero(data > maxval)
    if over.size:
        raise FormatError(path, int(starts[over[0]]), f"sample exceeds maxval {maxval}")
    data = data.reshape(h, w)
    if maxval != 255:
        data = data * (255.0 / maxval)
    return data


def write_pgm(path, img, ascii: bool = False) -> None:
    q = quantize(img)
    h, w = q.shape
    if ascii:
        rows = "\n".join(" ".join(str(v) for v in row) for row in q)
        Path(path).write_bytes(f"P2\n{w} {h}\n255\n{rows}\n".encode("ascii"))
    else:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + q.tobytes())


def read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.format != "PNG":
            raise FormatError(path, 0, f"not a PNG file ({im.format})")
        if im.mode in ("L", "1", "P") and (im.mode != "P" or _palette_is_gray(im)):
            return np.asarray(im.convert("L"), dtype=np.float64)
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return arr * (255.0 / 65535.0)
        raise FormatError(path, 25, f"unsupported PNG mode {im.mode!r}; expected grayscale")


def _palette_is_gray(im) -> bool:
    pal = np.asarray(im.getpalette() or [], dtype=np.int64).reshape(-1, 3)
    return bool(np.all(pal[:, 0] == pal[:, 1]) and np.all(pal[:, 1] == pal[:, 2]))


def write_png(path, img) -> None:
    from PIL import Image

    Image.fromarray(quantize(img)).save(path, format="PNG")


def quantize(img) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)


def _is_png(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(8) == b"\x89PNG\r\n\x1a\n"


def load_image(path) -> np.ndarray:
    """Load a PGM or PNG file as a float64 image in ``[0, 255]``."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return as_gray(read_png(path) if _is_png(path) else read_pgm(path))


def load_mask(path) -> np.ndarray:
    return load_image(path) > 0


def save_image(path, img) -> None:
    """Write by extension: ``.png`` -> PNG, anything else -> binary PGM."""
    if str(path).lower().endswith(".png"):
        write_png(path, img)
    else:
        write_pgm(path, img)


def save_mask(path, mask) -> None:
    save_image(path, as_mask(mask).astype(np.float64) * 255.0)
