"""Metrics over grasp traces and saliency-map sequences."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInput


@dataclass
class MetricReport:
    name: str
    value: float
    per_frame: list = field(default_factory=list)
    fingerprint: str = ""
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise InvalidInput(f"metric {self.name} is not finite")


def _same_timeline(a, b):
    if len(a.t) != len(b.t) or not np.allclose(a.t, b.t, rtol=0, atol=1e-12):
        raise InvalidInput("traces do not share a stimulus timeline")


def amplification_ratio(trace, baseline, upto: int | None = None) -> float:
    """Percent: peak gain-scaled output over peak unity-gain output.

    ``upto`` restricts both traces to their first ``upto`` control steps.
    """
    _same_timeline(trace, baseline)
    out = trace.output()[:upto]
    base = np.asarray(baseline.signal())[:upto]
    peak = float(np.max(base)) if base.size else 0.0
    if peak <= 0:
        raise InvalidInput("baseline has no stimulus")
    return 100.0 * float(np.max(out)) / peak


def reference_time(trace) -> float:
    t = trace.first("stable")
    if t is None:
        raise InvalidInput("trace never reached a stable contact")
    return t


def adaptation_level(trace, t: float) -> float:
    """Percent attenuation of the output at ``t`` relative to the stable-contact time."""
    t_ref = reference_time(trace)
    if t < t_ref - 1e-12:
        raise InvalidInput(f"t={t} precedes stabilisation at {t_ref}")
    out = trace.output()
    ref = out[trace.index_at(t_ref)]
    if ref <= 0:
        raise InvalidInput("reference output is not positive")
    return 100.0 * (1.0 - out[trace.index_at(t)] / ref)


def time_to_attenuation(trace, level: float = 50.0) -> float | None:
    """First time the adaptation level reaches ``level`` percent, or None."""
    t_ref = reference_time(trace)
    out = trace.output()
    i0 = trace.index_at(t_ref)
    ref = out[i0]
    hits = np.nonzero(out[i0:] <= ref * (1.0 - level / 100.0))[0]
    return None if hits.size == 0 else float(trace.t[i0 + hits[0]] - t_ref)


@dataclass
class SpeedReport:
    fast_time: float | None
    slow_time: float | None
    fast_is_faster: bool
    diagnostic: str


def speed_comparison(fast_trace, slow_trace) -> SpeedReport:
    _same_timeline(fast_trace, slow_trace)
    tf, ts = time_to_attenuation(fast_trace), time_to_attenuation(slow_trace)
    ok = tf is not None and (ts is None or tf < ts)
    fmt = lambda v: "unreached" if v is None else f"{v:.4g} s"
    diag = f"time to 50% attenuation: fast {fmt(tf)}, slow {fmt(ts)}"
    if not ok:
        diag += " (fast schedule is not faster)"
    return SpeedReport(tf, ts, ok, diag)


def _stack(maps, what: str) -> np.ndarray:
    arr = np.asarray([np.asarray(m) for m in maps])
    if arr.ndim != 3:
        raise InvalidInput(f"{what} must be a sequence of 2-D grids")
    return arr


def overlap_rate(salient: Sequence[np.ndarray], labels: Sequence[np.ndarray]) -> MetricReport:
    """Label recall: fraction of labelled cells that are also marked salient.

    ``salient`` holds boolean grids (True = method marks the cell; for
    saliency maps this is ``binary == 0``). Frames without labels count as
    1.0 and are flagged. Jaccard is reported alongside in ``extra``.
    """
    s = _stack(salient, "maps").astype(bool)
    lab = _stack(labels, "labels").astype(bool)
    if s.shape != lab.shape:
        raise InvalidInput(f"map/label shape mismatch: {s.shape} vs {lab.shape}")
    per_frame, flags = [], []
    for i, (a, b) in enumerate(zip(s, lab)):
        n = int(b.sum())
        if n == 0:
            per_frame.append(1.0)
            flags.append(f"frame {i}: no labels (counted as 1.0)")
        else:
            per_frame.append(float((a & b).sum()) / n)
    total = int(lab.sum())
    if total == 0:
        warnings.warn("overlap_rate: labels empty everywhere; defined as 1.0")
        value = 1.0
        flags.append("vacuous")
    else:
        value = float((s & lab).sum()) / total
    union = int((s | lab).sum())
    jaccard = float((s & lab).sum()) / union if union else 1.0
    return MetricReport("overlap_rate", value, per_frame, flags=flags,
                        extra={"jaccard": jaccard, "labelled_cells": total})
