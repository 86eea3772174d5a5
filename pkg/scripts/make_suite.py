#!/usr/bin/env python3
"""Regenerate every shipped artifact into one directory.

Writes the device sweep, both grasp scenarios, the synthetic video suite and
the vision results on it. Two runs with the same arguments produce identical
CSV and PGM files (manifests also carry wall-clock timings).
"""
import argparse
from pathlib import Path

from memdiff.cli import main as cli


def build(out: Path, seed: int = 2024) -> int:
    status = 0
    status |= cli(["device", "sweep", "--out", str(out / "sweep")])
    for name in ("task1", "task2"):
        status |= cli(["tactile", "run", name, "--out", str(out / name)])
    status |= cli(["synth", "gen", "--suite", "--seed", str(seed), "--out", str(out / "suite")])
    for video in sorted((out / "suite").iterdir()):
        status |= cli(["vision", "run", str(video / "frames"), "--labels", str(video / "labels"),
                       "--out", str(out / "vision" / video.name)])
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="artifacts")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    raise SystemExit(build(Path(args.out), args.seed))
