"""File formats: binary PGM, raw frame stacks, CSV artifacts and run manifests."""
from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidInput

_PGM_TOKEN = re.compile(rb"(?:#[^\n]*\n|\s)*(\S+)")


def write_pgm(path: str | Path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise InvalidInput("PGM output needs a 2-D uint8 array")
    h, w = img.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    fields, pos = [], 0
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if not m:
            raise InvalidInput(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise InvalidInput(f"{path}: not a binary PGM (P5) file")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise InvalidInput(f"{path}: bad PGM header") from None
    if maxval != 255:
        raise InvalidInput(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    pos += 1  # single whitespace byte after maxval
    body = data[pos:pos + w * h]
    if len(body) != w * h:
        raise InvalidInput(f"{path}: expected {w * h} pixel bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def read_sidecar(path: str | Path) -> dict[str, int]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidInput(f"{path}: bad header line {line!r}")
        out[key.strip()] = int(value)
    missing = {"width", "height", "frames"} - out.keys()
    if missing:
        raise InvalidInput(f"{path}: missing {', '.join(sorted(missing))}")
    return out


def iter_frames(source: str | Path) -> Iterator[np.ndarray]:
    """Frames from a directory of PGM files (lexicographic order) or a raw file.

    A raw file ``name.raw`` needs a sidecar ``name.hdr`` (or ``name.raw.hdr``)
    holding ``width=``, ``height=`` and ``frames=`` lines.
    """
    source = Path(source)
    if source.is_dir():
        files = sorted(p for p in source.iterdir() if p.suffix.lower() == ".pgm")
        if not files:
            raise InvalidInput(f"{source}: no .pgm frames found")
        for f in files:
            yield read_pgm(f)
        return
    header = next((h for h in (source.with_suffix(".hdr"), Path(str(source) + ".hdr"))
                   if h.exists()), None)
    if header is None:
        raise InvalidInput(f"{source}: raw input needs a sidecar .hdr file")
    meta = read_sidecar(header)
    w, h, n = meta["width"], meta["height"], meta["frames"]
    size = source.stat().st_size
    if size != w * h * n:
        raise InvalidInput(f"{source}: {size} bytes, header implies {w * h * n}")
    raw = np.memmap(source, dtype=np.uint8, mode="r", shape=(n, h, w))
    for k in range(n):
        yield np.array(raw[k])


def write_raw(path: str | Path, frames: Sequence[np.ndarray]) -> None:
    path = Path(path)
    h, w = frames[0].shape
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(np.ascontiguousarray(f, dtype=np.uint8).tobytes())
    path.with_suffix(".hdr").write_text(f"width={w}\nheight={h}\nframes={len(frames)}\n")


def read_grid(path: str | Path) -> np.ndarray:
    """Label/grid file: PGM (nonzero = 1) or CSV of numbers."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return (read_pgm(path) > 0).astype(np.uint8)
    return np.loadtxt(path, delimiter=",", ndmin=2)


def read_labels(source: str | Path) -> list[np.ndarray]:
    source = Path(source)
    files = sorted(p for p in source.iterdir() if p.suffix.lower() in (".pgm", ".csv"))
    if not files:
        raise InvalidInput(f"{source}: no label grids found")
    return [read_grid(f).astype(np.uint8) for f in files]


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_grid_csv(path: str | Path, grid: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(grid):
            w.writerow([fmt(v) for v in row])


def write_manifest(path: str | Path, entries: Mapping[str, object]) -> None:
    """Key-value run manifest, one ``key = value`` per line, keys sorted."""
    lines = [f"{k} = {fmt(entries[k])}" for k in sorted(entries)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        k, sep, v = line.partition(" = ")
        if sep:
            out[k] = v
    return out
