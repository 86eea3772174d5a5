"""Key-value configuration files (``[section]`` headers, ``key = value`` lines).

A run configuration is the shipped ``data/default.cfg`` overlaid by any user
file; sections and keys in the user file replace the defaults one by one.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from .device import DeviceParams
from .encoding import SchemeTable, TactileThresholds
from .errors import ConfigError

Sections = dict[str, dict[str, str]]


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(delimiters=("=",), allow_no_value=True,
                                  strict=False, interpolation=None,
                                  comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    p.optionxform = str
    return p


def read_sections(text: str, source: str = "<string>") -> Sections:
    p = _parser()
    try:
        p.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return {s: dict(p.items(s)) for s in p.sections()}


def read_file(path: str | Path) -> Sections:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return read_sections(text, str(path))


def default_text() -> str:
    return resources.files("memdiff").joinpath("data/default.cfg").read_text()


def data_path(name: str) -> Path:
    return Path(str(resources.files("memdiff").joinpath("data", name)))


def merge(base: Sections, over: Mapping[str, Mapping[str, str]]) -> Sections:
    out = {k: dict(v) for k, v in base.items()}
    for sec, body in over.items():
        out.setdefault(sec, {}).update(body)
    return out


def fingerprint(sections: Mapping[str, Mapping[str, str]]) -> str:
    lines = []
    for sec in sorted(sections):
        lines.append(f"[{sec}]")
        lines.extend(f"{k}={sections[sec][k]}" for k in sorted(sections[sec]))
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def _floats(sec: Mapping[str, str], name: str) -> dict[str, float]:
    try:
        return {k: float(v) for k, v in sec.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: non-numeric value ({exc})") from exc


@dataclass(frozen=True)
class PiezoModel:
    r_unloaded: float = 100e3
    sensitivity: float = 10e3
    r_floor: float = 5e3

    def __post_init__(self):
        if not (0 <= self.r_floor < self.r_unloaded):
            raise ConfigError("piezo r_floor must be below r_unloaded")
        if self.sensitivity <= 0:
            raise ConfigError("piezo sensitivity must be positive")


@dataclass(frozen=True)
class GainConfig:
    g_min: float = 0.4
    g_max: float = 8.5
    r_on: float = 25e3
    r_off: float = 350e3


@dataclass(frozen=True)
class ControllerConfig:
    pain_gain: float = 5.0
    pain_resistance: float = 35e3
    stable_steps: int = 20
    steady_rate: float = 5.0
    regrasp_delay: float = 0.020
    slip_gain: float = 0.30
    slip_refractory: float = 0.050
    f_max: float = 20.0
    nominal_force: float = 10.0
    ramp_rate: float = 40.0


@dataclass(frozen=True)
class SlipConfig:
    rate_threshold: float = 10e6  # ohm/s
    min_gap: float = 2e-3


@dataclass(frozen=True)
class TactileConfig:
    thresholds: TactileThresholds
    window: float = 0.005
    control_dt: float = 1e-3
    initial_resistance: float = 170e3


@dataclass(frozen=True)
class VisionConfig:
    cols: int = 40
    rows: int = 25
    fast_threshold: float = 0.30
    initial_resistance: float = 300e3
    binarize_threshold: float = 100e3
    fps: float = 25.0
    afterimage_bound: int = 15
    orientation_window: int = 3


@dataclass(frozen=True)
class Config:
    device: DeviceParams
    table: SchemeTable
    tactile: TactileConfig
    piezo: PiezoModel
    gain: GainConfig
    controller: ControllerConfig
    slip: SlipConfig
    vision: VisionConfig
    sections: Mapping[str, Mapping[str, str]]

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.sections)


def build(sections: Sections) -> Config:
    try:
        device = DeviceParams(**_floats(sections.get("device", {}), "device"))
        t = _floats(sections.get("tactile", {}), "tactile")
        thresholds = TactileThresholds(
            **{k: t.pop(k) for k in ("f_contact", "f_hazard", "spike_rate_threshold") if k in t})
        tactile = TactileConfig(thresholds=thresholds, **t)
        ctrl = _floats(sections.get("controller", {}), "controller")
        if "stable_steps" in ctrl:
            ctrl["stable_steps"] = int(ctrl["stable_steps"])
        vis = _floats(sections.get("vision", {}), "vision")
        vis.pop("fast_gain", None)
        for k in ("cols", "rows", "afterimage_bound", "orientation_window"):
            if k in vis:
                vis[k] = int(vis[k])
        gain = GainConfig(r_on=device.r_on, r_off=device.r_off,
                          **_floats(sections.get("gain", {}), "gain"))
        return Config(
            device=device,
            table=SchemeTable.from_sections(sections),
            tactile=tactile,
            piezo=PiezoModel(**_floats(sections.get("piezo", {}), "piezo")),
            gain=gain,
            controller=ControllerConfig(**ctrl),
            slip=SlipConfig(**_floats(sections.get("slip", {}), "slip")),
            vision=VisionConfig(**vis),
            sections=sections,
        )
    except TypeError as exc:
        raise ConfigError(f"unknown configuration key: {exc}") from exc


def load_config(path: str | Path | None = None, **overrides: Mapping[str, str]) -> Config:
    """Default config, overlaid by ``path`` and then by ``overrides`` sections."""
    sections = read_sections(default_text(), "default.cfg")
    if path is not None:
        sections = merge(sections, read_file(path))
    if overrides:
        sections = merge(sections, {k: {kk: str(vv) for kk, vv in v.items()}
                                    for k, v in overrides.items()})
    return build(sections)
