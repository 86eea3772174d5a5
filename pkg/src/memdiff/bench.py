"""Latency benchmarks for the vision and tactile pipelines."""
from __future__ import annotations

import time

import numpy as np

from .config import Config, data_path
from .synth import SyntheticVideoSpec, generate
from .tactile import load_scenario, run_scenario
from .vision import ArrayState, GridSpec, compress, update_array


def _stats(seconds) -> dict[str, float]:
    s = np.asarray(seconds) * 1e3
    return {"p50_ms": float(np.median(s)), "p99_ms": float(np.percentile(s, 99)),
            "n": int(s.size)}


def vision_latency(cfg: Config, n_frames: int = 200, seed: int = 0) -> dict[str, float]:
    """Per-frame compress (1920x900 -> 40x25) + array update time.

    Each frame is first copied into a reused capture buffer, outside the
    timed region, as a camera driver would deliver it.
    """
    video = SyntheticVideoSpec(frames=n_frames, size=(3, 3), velocity=(1, 0), start=(0, 11),
                               noise=0.05, seed=seed, wrap=True, block_w=48, block_h=36)
    frames, _ = generate(video)
    spec = GridSpec(40, 25, 48, 36)
    buf = np.empty_like(frames[0])
    v = cfg.vision
    state = ArrayState.uniform(spec.rows, spec.cols, v.initial_resistance, cfg.device)
    prev = compress(frames[0], spec)
    times = []
    for f in frames[1:]:
        np.copyto(buf, f)
        t0 = time.perf_counter()
        curr = compress(buf, spec)
        state, _, _ = update_array(prev, curr, state, cfg.table, cfg.device,
                                   v.fast_threshold, v.binarize_threshold)
        times.append(time.perf_counter() - t0)
        prev = curr
    return _stats(times)


def tactile_latency(cfg: Config, scenarios=("task1", "task2")) -> dict[str, float]:
    """Per-control-step compute time over the shipped scenarios."""
    times = []
    for name in scenarios:
        trace = run_scenario(load_scenario(data_path(f"scenarios/{name}.scn")), cfg)
        times.extend(trace.step_seconds)
    return _stats(times)
