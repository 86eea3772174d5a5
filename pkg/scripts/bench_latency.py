#!/usr/bin/env python3
"""Print p50/p99 latency of the vision frame pipeline and the tactile control step."""
import argparse

from memdiff.bench import tactile_latency, vision_latency
from memdiff.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--frames", type=int, default=200)
    args = ap.parse_args()
    cfg = load_config(args.config)
    for name, r in (("vision frame (compress 1920x900 + update 40x25)",
                     vision_latency(cfg, args.frames)),
                    ("tactile control step", tactile_latency(cfg))):
        print(f"{name}: p50 {r['p50_ms']:.3f} ms, p99 {r['p99_ms']:.3f} ms (n={r['n']})")


if __name__ == "__main__":
    main()
