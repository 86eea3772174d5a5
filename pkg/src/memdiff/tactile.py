"""Closed-loop grasp simulation with a memristor-gain amplifier.

One control step (default 1 ms): sample force -> piezo resistance -> attribute
-> pulse scheme -> memristor update -> amplifier gain -> controller.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import (Config, ControllerConfig, GainConfig, PiezoModel, SlipConfig,
                     read_sections)
from .device import MemristorState, apply_pulse_train, resistance, x_from_resistance
from .encoding import (Speed, TactileAttribute, TactileKind, adaptation_schedule,
                       extract_tactile, normalize_toward_mid, scheme_for)
from .errors import ConfigError, InvalidInput


class Phase(str, Enum):
    APPROACH = "Approach"
    CONTACT = "Contact"
    PAIN_REFLEX = "PainReflex"
    REGRASP = "Regrasp"
    STABLE_HOLD = "StableHold"
    SLIP_RECOVERY = "SlipRecovery"


@dataclass(frozen=True)
class ControllerState:
    phase: Phase = Phase.APPROACH
    grip_force_cmd: float = 10.0
    mild_run: int = 0       # consecutive steady Mild steps
    timer: float = 0.0      # time spent in PainReflex
    since_slip: float = float("inf")


# -- sensor and amplifier ----------------------------------------------------

def piezo_resistance(force: float, model: PiezoModel) -> float:
    if force < 0:
        raise InvalidInput(f"negative force {force}")
    return max(model.r_floor, model.r_unloaded - model.sensitivity * force)


def sensor_signal(piezo_r, model: PiezoModel):
    """Normalised sensor output in [0, 1): fractional drop of film resistance."""
    return (model.r_unloaded - np.asarray(piezo_r, dtype=float)) / model.r_unloaded


def gain_from_resistance(mem_r: float, cfg: GainConfig) -> float:
    """Amplifier gain set by the memristor; out-of-band resistance is clamped."""
    r = min(max(mem_r, cfg.r_on), cfg.r_off)
    frac = (1 / r - 1 / cfg.r_off) / (1 / cfg.r_on - 1 / cfg.r_off)
    return cfg.g_min + (cfg.g_max - cfg.g_min) * frac


# -- controller ---------------------------------------------------------------

HAZARDS = (TactileKind.HAZARD, TactileKind.PERSISTENT_HAZARD)


def controller_step(state: ControllerState, attr: TactileAttribute, gain: float,
                    cfg: ControllerConfig, dt: float = 1e-3
                    ) -> tuple[ControllerState, str | None]:
    """Advance the grasp state machine by one control step.

    Returns the new state and an action (``"regrasp"``, ``"execute_regrasp"``,
    ``"increase_force"``) or None.
    """
    kind = attr.kind
    steady = kind is TactileKind.MILD and attr.spike_rate <= cfg.steady_rate
    mild_run = state.mild_run + 1 if steady else 0
    since_slip = state.since_slip + dt
    s = replace(state, mild_run=mild_run, since_slip=since_slip)
    phase = state.phase

    if phase is Phase.APPROACH:
        if kind is not TactileKind.NO_CONTACT:
            return replace(s, phase=Phase.CONTACT), None
        return s, None

    if phase is Phase.CONTACT:
        if kind in HAZARDS and gain >= cfg.pain_gain:
            return replace(s, phase=Phase.PAIN_REFLEX, timer=0.0), "regrasp"
        if kind is TactileKind.NO_CONTACT:
            return replace(s, phase=Phase.APPROACH), None
        if mild_run >= cfg.stable_steps:
            return replace(s, phase=Phase.STABLE_HOLD), None
        return s, None

    if phase is Phase.PAIN_REFLEX:
        timer = state.timer + dt
        if timer >= cfg.regrasp_delay - 1e-12:
            return replace(s, phase=Phase.REGRASP, timer=0.0, mild_run=0), "execute_regrasp"
        return replace(s, timer=timer), None

    if phase is Phase.REGRASP:
        if mild_run >= cfg.stable_steps:
            return replace(s, phase=Phase.STABLE_HOLD), None
        return s, None

    slip = kind is TactileKind.SLIP_SPIKE and since_slip >= cfg.slip_refractory
    if phase in (Phase.STABLE_HOLD, Phase.SLIP_RECOVERY) and slip:
        cmd = min(cfg.f_max, state.grip_force_cmd * (1.0 + cfg.slip_gain))
        return replace(s, phase=Phase.SLIP_RECOVERY, grip_force_cmd=cmd,
                       since_slip=0.0), "increase_force"

    if phase is Phase.STABLE_HOLD:
        if kind in HAZARDS:
            return replace(s, phase=Phase.CONTACT), None
        if kind is TactileKind.NO_CONTACT:
            return replace(s, phase=Phase.APPROACH), None
    return s, None


# -- slip detection -------------------------------------------------------------

def detect_slip(window: Sequence[tuple[float, float]], cfg: SlipConfig) -> list[float]:
    """Times where |d(piezo_r)/dt| exceeds the threshold, debounced by min_gap."""
    events: list[float] = []
    for (t0, r0), (t1, r1) in zip(window, window[1:]):
        if t1 <= t0:
            raise InvalidInput("window must be strictly time-sorted")
        if abs(r1 - r0) / (t1 - t0) > cfg.rate_threshold:
            if not events or t1 - events[-1] >= cfg.min_gap:
                events.append(t1)
    return events


# -- scenarios ------------------------------------------------------------------

DIRECTIVES = ("force", "ramp", "slip", "regrasp_force", "end")
MARKERS = ("contact", "hazard_onset", "sensitized", "pain_threshold", "pain_reflex",
           "regrasp", "stable", "slip_spike", "force_increase", "normalized")


@dataclass(frozen=True)
class GraspScenario:
    name: str
    events: tuple[tuple[float, str, float], ...]
    expected_markers: tuple[tuple[float, str], ...] = ()
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = [e[0] for e in self.events]
        if ts != sorted(ts):
            raise ConfigError("scenario events must be time-sorted")
        for _, d, _ in self.events:
            if d not in DIRECTIVES:
                raise ConfigError(f"unknown scenario directive {d!r}")
        for _, m in self.expected_markers:
            if m not in MARKERS:
                raise ConfigError(f"unknown marker {m!r}")

    @property
    def duration(self) -> float:
        ends = [t for t, d, _ in self.events if d == "end"]
        return ends[0] if ends else (self.events[-1][0] if self.events else 0.0)


def _parse_rows(body: dict, n: int, what: str) -> list[list[str]]:
    rows = []
    for line in body:
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != n:
            raise ConfigError(f"bad {what} line {line!r}: expected {n} fields")
        rows.append(parts)
    return rows


def parse_scenario(text: str, source: str = "<scenario>") -> GraspScenario:
    sec = read_sections(text, source)
    try:
        events = [(float(t), d, float(v)) for t, d, v in _parse_rows(sec.get("events", {}), 3, "event")]
        expect = [(float(t), m) for t, m in _parse_rows(sec.get("expect", {}), 2, "expect")]
        checks = {k: float(v) for k, v in sec.get("checks", {}).items()}
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    name = sec.get("scenario", {}).get("name", Path(source).stem)
    return GraspScenario(name, tuple(events), tuple(expect), checks)


def load_scenario(path: str | Path) -> GraspScenario:
    path = Path(path)
    try:
        return parse_scenario(path.read_text(), str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


class _Profile:
    """Scripted contact force (at nominal grip command) as a function of time."""

    def __init__(self, events, ramp_rate: float):
        self.events = list(events)
        self.ramp_rate = ramp_rate
        self.level = 0.0
        self.target = 0.0
        self.regrasp_target: float | None = None
        self.dips: list[tuple[float, float]] = []
        self.i = 0

    def regrasp(self):
        if self.regrasp_target is not None:
            self.target = self.regrasp_target

    def __call__(self, t: float, dt: float) -> float:
        while self.i < len(self.events) and self.events[self.i][0] <= t + 1e-12:
            _, d, v = self.events[self.i]
            if d == "force":
                self.level = self.target = v
            elif d == "ramp":
                self.target = v
            elif d == "slip":
                self.dips.append((t, v))
            elif d == "regrasp_force":
                self.regrasp_target = v
            self.i += 1
        step = self.ramp_rate * dt
        if self.level < self.target:
            self.level = min(self.target, self.level + step)
        elif self.level > self.target:
            self.level = max(self.target, self.level - step)
        force = self.level
        for t0, depth in self.dips:
            if t0 + 0.5 * dt <= t <= t0 + 2.5 * dt:
                force -= depth
        return max(force, 0.0)


@dataclass
class GraspTrace:
    t: list = field(default_factory=list)
    piezo_r: list = field(default_factory=list)
    mem_r: list = field(default_factory=list)
    gain: list = field(default_factory=list)
    force_cmd: list = field(default_factory=list)
    event: list = field(default_factory=list)
    force: list = field(default_factory=list)
    kind: list = field(default_factory=list)
    phase: list = field(default_factory=list)
    r_unloaded: float = 100e3
    step_seconds: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    def append(self, **row):
        for k, v in row.items():
            getattr(self, k).append(v)

    def signal(self) -> np.ndarray:
        return (self.r_unloaded - np.asarray(self.piezo_r)) / self.r_unloaded

    def output(self) -> np.ndarray:
        return np.asarray(self.gain) * self.signal()

    def marker_times(self, name: str) -> list[float]:
        return [t for t, ev in zip(self.t, self.event) if ev and name in ev.split(";")]

    def first(self, name: str) -> float | None:
        times = self.marker_times(name)
        return times[0] if times else None

    def index_at(self, t: float) -> int:
        i = int(np.searchsorted(np.asarray(self.t), t - 1e-9))
        if i >= len(self.t):
            raise InvalidInput(f"t={t} beyond end of trace")
        return i


def _modulate(state, attr, mem_r, phase, cfg: Config, schedule: Speed | None):
    if phase is Phase.SLIP_RECOVERY:
        return normalize_toward_mid(state, cfg.device, cfg.table)
    if schedule is not None and attr.kind is TactileKind.MILD:
        if cfg.table.band(mem_r) == "ceiling":
            return scheme_for(attr, mem_r, cfg.table)
        return adaptation_schedule(schedule, cfg.table)
    return scheme_for(attr, mem_r, cfg.table)


def run_scenario(scenario: GraspScenario, cfg: Config, dt: float | None = None,
                 closed_loop: bool = True, schedule: Speed | None = None,
                 sensitize: bool = True, unity_gain: bool = False,
                 initial_resistance: float | None = None) -> GraspTrace:
    """Simulate a scripted grasp, one control step at a time.

    ``closed_loop=False`` freezes the controller in Contact (no reflexes, no
    force changes) for open-loop characterisation runs. ``unity_gain`` records
    gain 1 while keeping everything else identical, giving the baseline for
    amplification ratios.
    """
    dt = cfg.tactile.control_dt if dt is None else dt
    if dt <= 0:
        raise InvalidInput("dt must be > 0")
    if not scenario.events:
        raise InvalidInput(f"scenario {scenario.name!r} has no events: empty trace")
    ctl = cfg.controller
    profile = _Profile(scenario.events, ctl.ramp_rate)
    r0 = cfg.tactile.initial_resistance if initial_resistance is None else initial_resistance
    state = MemristorState(x_from_resistance(r0, cfg.device))
    mem_r = resistance(state, cfg.device)
    ctrl = ControllerState(grip_force_cmd=ctl.nominal_force,
                           phase=Phase.APPROACH if closed_loop else Phase.CONTACT)
    win_n = max(2, int(round(cfg.tactile.window / dt)))
    history: list[tuple[float, float]] = []
    trace = GraspTrace(r_unloaded=cfg.piezo.r_unloaded)
    seen: set[str] = set()
    n_steps = int(round(scenario.duration / dt)) + 1
    for k in range(n_steps):
        t0 = time.perf_counter()
        t = k * dt
        force = profile(t, dt) * ctrl.grip_force_cmd / ctl.nominal_force
        piezo_r = piezo_resistance(force, cfg.piezo)
        history.append((t, force))
        window = history[-win_n:]
        attr = extract_tactile(window, mem_r, cfg.tactile.thresholds, cfg.table)
        if not sensitize and attr.kind is TactileKind.PERSISTENT_HAZARD:
            attr = replace(attr, kind=TactileKind.HAZARD)
        train = _modulate(state, attr, mem_r, ctrl.phase, cfg, schedule)
        state = apply_pulse_train(state, train, cfg.device)
        mem_r = resistance(state, cfg.device)
        gain = gain_from_resistance(mem_r, cfg.gain)
        events = []
        if closed_loop:
            prev_phase = ctrl.phase
            ctrl, action = controller_step(ctrl, attr, gain, ctl, dt)
            if ctrl.phase is Phase.STABLE_HOLD and prev_phase is not Phase.STABLE_HOLD:
                events.append("stable")
            if action == "regrasp":
                events.append("pain_reflex")
            elif action == "execute_regrasp":
                profile.regrasp()
                events.append("regrasp")
            elif action == "increase_force":
                events.extend(["slip_spike", "force_increase"])
        elapsed = time.perf_counter() - t0

        def once(name, cond):
            if cond and name not in seen:
                seen.add(name)
                events.append(name)

        once("contact", attr.kind is not TactileKind.NO_CONTACT)
        once("hazard_onset", attr.kind in HAZARDS)
        once("sensitized", attr.kind is TactileKind.PERSISTENT_HAZARD)
        once("pain_threshold", mem_r < ctl.pain_resistance and gain >= ctl.pain_gain)
        if closed_loop:
            lo = cfg.table.mid_center * (1 - cfg.table.mid_tolerance)
            hi = cfg.table.mid_center * (1 + cfg.table.mid_tolerance)
            once("normalized", ctrl.phase is Phase.SLIP_RECOVERY and lo <= mem_r <= hi)
        else:
            once("stable", attr.kind is not TactileKind.NO_CONTACT)
        trace.append(t=t, piezo_r=piezo_r, mem_r=mem_r,
                     gain=1.0 if unity_gain else gain, force_cmd=ctrl.grip_force_cmd,
                     event=";".join(events), force=force, kind=attr.kind.value,
                     phase=ctrl.phase.value, step_seconds=elapsed)
    return trace


def constant_scenario(force: float, n_steps: int, dt: float = 1e-3,
                      name: str = "constant") -> GraspScenario:
    """Force applied from t=0 for ``n_steps`` control steps."""
    return GraspScenario(name, ((0.0, "force", force), ((n_steps - 1) * dt, "end", 0.0)))


def nociception_run(cfg: Config, force: float = 8.0, n_steps: int = 150,
                    sensitize: bool = True, unity_gain: bool = False) -> GraspTrace:
    return run_scenario(constant_scenario(force, n_steps, cfg.tactile.control_dt, "nociception"),
                        cfg, closed_loop=False, sensitize=sensitize, unity_gain=unity_gain)


def adaptation_run(cfg: Config, force: float = 3.0, n_steps: int = 300,
                   speed: Speed | str | None = None, unity_gain: bool = False) -> GraspTrace:
    return run_scenario(constant_scenario(force, n_steps, cfg.tactile.control_dt, "adaptation"),
                        cfg, closed_loop=False, unity_gain=unity_gain,
                        schedule=None if speed is None else Speed(speed))


def verify_scenario(trace: GraspTrace, scenario: GraspScenario) -> list[str]:
    """Compare a trace with the scenario's expectations; returns failure lines."""
    failures = []
    last = -float("inf")
    for deadline, marker in scenario.expected_markers:
        t = next((tt for tt in trace.marker_times(marker) if tt >= last), None)
        if t is None:
            failures.append(f"marker {marker}: missing (expected by {deadline:g} s)")
            continue
        if t > deadline + 1e-9:
            failures.append(f"marker {marker}: at {t:g} s, expected by {deadline:g} s")
        last = t
    c = scenario.checks
    if not len(trace):
        return failures + ["empty trace"]
    final_r = trace.mem_r[-1]
    if "final_mem_r_min" in c and not final_r > c["final_mem_r_min"]:
        failures.append(f"final mem_r {final_r:.0f} not > {c['final_mem_r_min']:.0f}")
    if "final_mem_r_max" in c and not final_r < c["final_mem_r_max"]:
        failures.append(f"final mem_r {final_r:.0f} not < {c['final_mem_r_max']:.0f}")
    if "adaptation_time" in c:
        from .evaluation import adaptation_level
        level = adaptation_level(trace, c["adaptation_time"])
        target, tol = c.get("adaptation_target", 75.0), c.get("adaptation_tol", 5.0)
        if abs(level - target) > tol:
            failures.append(f"adaptation {level:.1f}% at {c['adaptation_time']:g} s, "
                            f"expected {target:g} +/- {tol:g}")
    if "force_increase_steps" in c:
        ts = trace.first("slip_spike")
        if ts is None:
            failures.append("no slip spike")
        else:
            i = trace.index_at(ts)
            j = min(i + int(c["force_increase_steps"]), len(trace) - 1)
            if not trace.force_cmd[j] > trace.force_cmd[max(i - 1, 0)]:
                failures.append("grip force not increased after slip spike")
    return failures
