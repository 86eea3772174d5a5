"""Feature extraction and the piecewise attribute -> pulse-train scheme.

Tactile force windows and per-pixel intensity changes are reduced to discrete
attributes; :func:`scheme_for` then looks up a pulse template keyed by the
attribute and the device's current resistance band.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .device import DeviceParams, MemristorState, PulseTrain, resistance
from .errors import ConfigError, InvalidInput

INTENSITY_MAX = 2.56


class TactileKind(str, Enum):
    NO_CONTACT = "NoContact"
    MILD = "Mild"
    HAZARD = "Hazard"
    PERSISTENT_HAZARD = "PersistentHazard"
    SLIP_SPIKE = "SlipSpike"


class VisualClass(str, Enum):
    FAST = "Fast"
    SLOW = "Slow"


class Speed(str, Enum):
    SLOW = "Slow"
    FAST = "Fast"


BANDS = ("floor", "low", "mid", "high", "ceiling")
NULL = "none"
NORMALIZE = "normalize"


@dataclass(frozen=True)
class TactileThresholds:
    f_contact: float = 0.2
    f_hazard: float = 5.0
    spike_rate_threshold: float = 50.0


@dataclass(frozen=True)
class TactileAttribute:
    kind: TactileKind
    magnitude: float
    spike_rate: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise InvalidInput("magnitude must be >= 0")


@dataclass(frozen=True)
class VisualChange:
    delta: float
    cls: VisualClass


@dataclass(frozen=True)
class SchemeTable:
    templates: Mapping[str, PulseTrain]
    mapping: Mapping[tuple[str, str], str]
    sensitization_threshold: float = 100e3
    floor: float = 27e3
    low_max: float = 100e3
    mid_center: float = 170e3
    high_min: float = 250e3
    ceiling: float = 330e3
    mid_tolerance: float = 0.10
    fast_gain: float = 0.5

    def __post_init__(self):
        if not (self.floor < self.low_max <= self.mid_center < self.high_min < self.ceiling):
            raise ConfigError("bands must satisfy floor < low_max <= mid_center < high_min < ceiling")
        for name in self.mapping.values():
            if name not in (NULL, NORMALIZE) and name not in self.templates:
                raise ConfigError(f"scheme references unknown template {name!r}")

    def band(self, r: float) -> str:
        if r <= self.floor:
            return "floor"
        if r < self.low_max:
            return "low"
        if r < self.high_min:
            return "mid"
        if r < self.ceiling:
            return "high"
        return "ceiling"

    def template(self, name: str) -> PulseTrain:
        try:
            return self.templates[name]
        except KeyError:
            raise ConfigError(f"missing template {name!r}") from None

    def lookup(self, kind: str, band: str) -> str:
        key = (kind, band)
        if key in self.mapping:
            return self.mapping[key]
        if (kind, "*") in self.mapping:
            return self.mapping[(kind, "*")]
        raise ConfigError(f"scheme table has no entry for {kind} in band {band}")

    @classmethod
    def from_sections(cls, sections: Mapping[str, Mapping[str, str]]) -> "SchemeTable":
        templates = {}
        for name, body in sections.items():
            if not name.startswith("template."):
                continue
            try:
                templates[name[len("template."):]] = PulseTrain(
                    amplitude=float(body["amplitude"]),
                    pulse_width=float(body["pulse_width"]),
                    duty_cycle=float(body["duty_cycle"]),
                    count=int(body["count"]),
                )
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad template section [{name}]: {exc}") from exc
        mapping = {}
        for key, value in sections.get("scheme", {}).items():
            kind, _, band = key.partition(".")
            if band != "*" and band not in BANDS:
                raise ConfigError(f"unknown band {band!r} in scheme key {key!r}")
            mapping[(kind, band)] = value.strip()
        bands = sections.get("bands", {})
        kw = {k: float(bands[k]) for k in
              ("sensitization_threshold", "floor", "low_max", "mid_center",
               "high_min", "ceiling", "mid_tolerance") if k in bands}
        vision = sections.get("vision", {})
        if "fast_gain" in vision:
            kw["fast_gain"] = float(vision["fast_gain"])
        return cls(templates=templates, mapping=mapping, **kw)


# -- feature extraction ------------------------------------------------------

def extract_tactile(window: Sequence[tuple[float, float]], device_r: float,
                    thresholds: TactileThresholds,
                    table: SchemeTable | None = None) -> TactileAttribute:
    """Classify a time-sorted force window.

    Rules are applied in order: no contact, slip spike (steep dF/dt), hazard
    (upgraded to persistent when the device is already below the
    sensitisation threshold), mild.
    """
    if len(window) == 0:
        raise InvalidInput("empty force window")
    t = np.array([w[0] for w in window], dtype=float)
    f = np.array([w[1] for w in window], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise InvalidInput("window must be strictly time-sorted")
    peak = float(np.max(f))
    rate = float(np.max(np.abs(np.diff(f) / np.diff(t)))) if len(f) > 1 else 0.0
    peak = max(peak, 0.0)
    if peak < thresholds.f_contact:
        kind = TactileKind.NO_CONTACT
    elif rate >= thresholds.spike_rate_threshold:
        kind = TactileKind.SLIP_SPIKE
    elif peak >= thresholds.f_hazard:
        sens = table.sensitization_threshold if table is not None else 100e3
        kind = TactileKind.PERSISTENT_HAZARD if device_r < sens else TactileKind.HAZARD
    else:
        kind = TactileKind.MILD
    return TactileAttribute(kind, peak, rate)


def extract_visual(prev: float, curr: float, fast_threshold: float = 0.30) -> VisualChange:
    for v in (prev, curr):
        if not (0.0 <= v <= INTENSITY_MAX):
            raise InvalidInput(f"intensity {v} outside [0, {INTENSITY_MAX}]")
    delta = abs(curr - prev)
    return VisualChange(delta, VisualClass.FAST if delta >= fast_threshold else VisualClass.SLOW)


def extract_visual_grid(prev: np.ndarray, curr: np.ndarray,
                        fast_threshold: float = 0.30) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`extract_visual`; returns (delta, is_fast)."""
    prev = np.asarray(prev, dtype=float)
    curr = np.asarray(curr, dtype=float)
    if prev.shape != curr.shape:
        raise InvalidInput(f"grid shapes differ: {prev.shape} vs {curr.shape}")
    for g in (prev, curr):
        if g.size and (g.min() < 0.0 or g.max() > INTENSITY_MAX):
            raise InvalidInput(f"intensity outside [0, {INTENSITY_MAX}]")
    delta = np.abs(curr - prev)
    return delta, delta >= fast_threshold


# -- encoding ----------------------------------------------------------------

def null_train(like: PulseTrain | None = None) -> PulseTrain:
    if like is None:
        return PulseTrain(0.0, 10e-6, 1.0, 1)
    return replace(like, amplitude=0.0)


def fast_amplitude(delta, table: SchemeTable):
    cap = table.template("visual_fast").amplitude
    return np.minimum(cap, table.fast_gain * np.asarray(delta, dtype=float)) \
        if np.ndim(delta) else min(cap, table.fast_gain * float(delta))


def _normalize_for_r(r: float, table: SchemeTable) -> PulseTrain:
    lo = table.mid_center * (1 - table.mid_tolerance)
    hi = table.mid_center * (1 + table.mid_tolerance)
    if r > hi:
        return table.template("normalize_up")
    if r < lo:
        return table.template("normalize_down")
    return null_train(table.template("normalize_up"))


def scheme_for(attr: TactileAttribute | VisualChange, device_r: float,
               table: SchemeTable) -> PulseTrain:
    if isinstance(attr, TactileAttribute):
        kind = attr.kind.value
    elif isinstance(attr, VisualChange):
        kind = attr.cls.value
    else:
        raise ConfigError(f"no scheme for attribute type {type(attr).__name__}")
    name = table.lookup(kind, table.band(device_r))
    if name == NORMALIZE:
        return _normalize_for_r(device_r, table)
    if name == NULL:
        return null_train()
    train = table.template(name)
    if kind == VisualClass.FAST.value:
        return replace(train, amplitude=fast_amplitude(attr.delta, table))
    return train


def normalize_toward_mid(state: MemristorState, params: DeviceParams,
                         table: SchemeTable) -> PulseTrain:
    """One-shot corrective train toward the mid (normal perception) band."""
    return _normalize_for_r(resistance(state, params), table)


def adaptation_schedule(speed: Speed | str, table: SchemeTable) -> PulseTrain:
    speed = Speed(speed)
    return table.template("adapt_fast" if speed is Speed.FAST else "adapt_slow")


def _visual_table(table: SchemeTable):
    """Per (band, class) train parameters; class 0 = Slow, 1 = Fast."""
    amp = np.zeros((len(BANDS), 2))
    width = np.full((len(BANDS), 2), table.template("visual_fast").pulse_width)
    count = np.zeros((len(BANDS), 2), dtype=np.int64)
    scaled = np.zeros((len(BANDS), 2), dtype=bool)
    for b, band in enumerate(BANDS):
        for c, cls in enumerate((VisualClass.SLOW, VisualClass.FAST)):
            name = table.lookup(cls.value, band)
            if name == NULL:
                continue
            if name == NORMALIZE:
                raise ConfigError("normalize is not supported for visual classes")
            t = table.template(name)
            amp[b, c], width[b, c], count[b, c] = t.amplitude, t.pulse_width, t.count
            scaled[b, c] = cls is VisualClass.FAST
    return amp, width, count, scaled


def visual_trains(delta: np.ndarray, is_fast: np.ndarray, device_r: np.ndarray,
                  table: SchemeTable) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell :func:`scheme_for` for visual changes, as (amplitude, width, count).

    Gives the same trains as calling :func:`scheme_for` cell by cell. Null
    entries come back with count 0.
    """
    key = id(table)
    cached = _VISUAL_CACHE.get(key)
    if cached is None or cached[0] is not table:
        cached = (table, _visual_table(table))
        _VISUAL_CACHE[key] = cached
    amp_t, width_t, count_t, scaled_t = cached[1]
    device_r = np.asarray(device_r, dtype=float)
    band = ((device_r > table.floor).astype(np.intp) + (device_r >= table.low_max)
            + (device_r >= table.high_min) + (device_r >= table.ceiling))
    cls = np.asarray(is_fast, dtype=np.intp)
    amp = np.where(scaled_t[band, cls], fast_amplitude(delta, table), amp_t[band, cls])
    return amp, width_t[band, cls], count_t[band, cls]


_VISUAL_CACHE: dict = {}
