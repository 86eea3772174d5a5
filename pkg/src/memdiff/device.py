"""Behavioural model of a thresholded, nonvolatile memristor.

State ``x`` lives in [0, 1] (1 = full-ON). Supra-threshold voltages drive the
state with a Joglekar window ``w(x) = 1 - (2x - 1)**(2p)``; inside the dead zone
``v_tn <= v <= v_tp`` nothing moves.

For the default ``p = 1`` the window is ``4x(1-x)`` and the constant-voltage
ODE is logistic, so each interval is integrated in closed form. Other window
exponents fall back to fixed-step RK4 with ``dt/100`` substeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInput

RK4_SUBSTEPS = 100
_MAX_EXPONENT = 700.0  # keeps exp() away from under/overflow


@dataclass(frozen=True)
class DeviceParams:
    r_on: float = 25e3
    r_off: float = 350e3
    v_tp: float = 0.15
    v_tn: float = -0.15
    alpha_p: float = 100.0
    alpha_n: float = 100.0
    window_exponent: float = 1.0

    def __post_init__(self):
        if not (0 < self.r_on < self.r_off):
            raise InvalidInput(f"need 0 < r_on < r_off, got {self.r_on}, {self.r_off}")
        if not (self.v_tn < 0 < self.v_tp):
            raise InvalidInput(f"need v_tn < 0 < v_tp, got {self.v_tn}, {self.v_tp}")
        if self.alpha_p <= 0 or self.alpha_n <= 0:
            raise InvalidInput("drive rates must be positive")
        if self.window_exponent <= 0:
            raise InvalidInput("window_exponent must be positive")


@dataclass(frozen=True)
class MemristorState:
    x: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0):
            raise InvalidInput(f"state x={self.x} outside [0, 1]")


@dataclass(frozen=True)
class PulseTrain:
    amplitude: float
    pulse_width: float
    duty_cycle: float
    count: int

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise InvalidInput("amplitude must be finite")
        if not self.pulse_width > 0:
            raise InvalidInput("pulse_width must be > 0")
        if not (0 < self.duty_cycle <= 1):
            raise InvalidInput("duty_cycle must be in (0, 1]")
        if int(self.count) != self.count or self.count < 1:
            raise InvalidInput("count must be a positive integer")

    @property
    def period(self) -> float:
        return self.pulse_width / self.duty_cycle

    @property
    def duration(self) -> float:
        return self.count * self.period

    @property
    def on_time(self) -> float:
        return self.count * self.pulse_width

    def is_null(self) -> bool:
        return self.amplitude == 0.0


@dataclass(frozen=True)
class SweepSpec:
    peak_to_peak: float = 0.5
    frequency: float = 10.0
    series_resistance: float = 10e3
    samples_per_period: int = 1000
    periods: int = 2

    def __post_init__(self):
        if not self.peak_to_peak > 0:
            raise InvalidInput("peak_to_peak must be > 0")
        if self.series_resistance < 0:
            raise InvalidInput("series_resistance must be >= 0")
        if not self.frequency > 0:
            raise InvalidInput("frequency must be > 0")
        if self.samples_per_period < 1 or self.periods < 1:
            raise InvalidInput("samples_per_period and periods must be >= 1")


class SweepSample(NamedTuple):
    t: float
    applied_v: float
    device_v: float
    current_a: float
    x: float


# -- readout -----------------------------------------------------------------

def conductance_fraction(x, params: DeviceParams):
    """Normalised conductance; equals x under conductance-linear mixing."""
    g = x / params.r_on + (1 - x) / params.r_off
    return (g - 1 / params.r_off) / (1 / params.r_on - 1 / params.r_off)


def resistance_from_x(x, params: DeviceParams):
    return 1.0 / (x / params.r_on + (1 - x) / params.r_off)


def resistance(state: MemristorState, params: DeviceParams) -> float:
    return resistance_from_x(state.x, params)


def x_from_resistance(r, params: DeviceParams):
    """Inverse of :func:`resistance_from_x`; r outside [r_on, r_off] is clipped."""
    r = np.clip(r, params.r_on, params.r_off)
    x = (1 / r - 1 / params.r_off) / (1 / params.r_on - 1 / params.r_off)
    return np.clip(x, 0.0, 1.0) if np.ndim(x) else float(min(max(x, 0.0), 1.0))


def eigenvalue(state: MemristorState, params: DeviceParams) -> float:
    """Scheme-selection summary of the state: normalised conductance in [0, 1]."""
    return float(conductance_fraction(state.x, params))


# -- dynamics ----------------------------------------------------------------

def drive_rate(v, params: DeviceParams):
    """Signed prefactor of the window function; zero inside the dead zone."""
    if np.ndim(v) == 0:
        v = float(v)
        if v > params.v_tp:
            return params.alpha_p * (v - params.v_tp)
        if v < params.v_tn:
            return params.alpha_n * (v - params.v_tn)
        return 0.0
    v = np.asarray(v, dtype=float)
    return np.where(v > params.v_tp, params.alpha_p * (v - params.v_tp),
                    np.where(v < params.v_tn, params.alpha_n * (v - params.v_tn), 0.0))


def window(x, p: float):
    return 1.0 - (2.0 * x - 1.0) ** (2.0 * p)


def _logistic_scalar(x: float, z: float) -> float:
    if z == 0.0:
        return x
    e = math.exp(-min(abs(z), _MAX_EXPONENT))
    if z > 0:
        return x / (x + (1.0 - x) * e)
    return x * e / ((1.0 - x) + x * e)


def _logistic_array(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.minimum(np.abs(z), _MAX_EXPONENT))
    up = x / (x + (1.0 - x) * e)
    down = x * e / ((1.0 - x) + x * e)
    return np.where(z > 0, up, np.where(z < 0, down, x))


def _rk4(x, rate, dt: float, p: float):
    h = dt / RK4_SUBSTEPS
    for _ in range(RK4_SUBSTEPS):
        k1 = rate * window(x, p)
        k2 = rate * window(np.clip(x + 0.5 * h * k1, 0.0, 1.0), p)
        k3 = rate * window(np.clip(x + 0.5 * h * k2, 0.0, 1.0), p)
        k4 = rate * window(np.clip(x + h * k3, 0.0, 1.0), p)
        x = np.clip(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0, 1.0)
    return x


def advance(x, v, dt, params: DeviceParams):
    """Integrate the state over ``dt`` seconds at constant voltage ``v``.

    Works on floats or on arrays (elementwise ``v``/``dt`` allowed). Cells in
    the dead zone are returned bit-identical.
    """
    rate = drive_rate(v, params)
    scalar = np.ndim(x) == 0 and np.ndim(rate) == 0 and np.ndim(dt) == 0
    if params.window_exponent == 1.0:
        if scalar:
            return _logistic_scalar(float(x), 4.0 * rate * float(dt))
        x = np.asarray(x, dtype=float)
        return _logistic_array(x, 4.0 * np.asarray(rate) * np.asarray(dt, dtype=float))
    if scalar:
        if rate == 0.0:
            return float(x)
        return float(_rk4(float(x), rate, float(dt), params.window_exponent))
    x = np.asarray(x, dtype=float)
    moved = _rk4(x, np.asarray(rate, dtype=float) + 0 * x,
                 np.asarray(dt, dtype=float), params.window_exponent)
    return np.where(np.asarray(rate) != 0.0, moved, x)


def step(state: MemristorState, voltage: float, dt: float,
         params: DeviceParams) -> MemristorState:
    if not (math.isfinite(voltage) and math.isfinite(dt)):
        raise InvalidInput("voltage and dt must be finite")
    if dt <= 0:
        raise InvalidInput("dt must be > 0")
    return MemristorState(advance(state.x, voltage, dt, params))


def apply_pulse_train(state: MemristorState, train: PulseTrain,
                      params: DeviceParams) -> MemristorState:
    """Apply ``count`` periods: ``amplitude`` for ``pulse_width``, then 0 V.

    The off interval is sub-threshold and therefore an exact no-op, so only
    the on intervals are integrated.
    """
    x = state.x
    for _ in range(train.count):
        x = advance(x, train.amplitude, train.pulse_width, params)
    return MemristorState(x)


def apply_trains(x: np.ndarray, amplitude: np.ndarray, pulse_width: np.ndarray,
                 count: np.ndarray, params: DeviceParams) -> np.ndarray:
    """Elementwise :func:`apply_pulse_train` over an array of independent cells.

    Cell ``i`` receives ``count[i]`` pulses of ``amplitude[i]`` volts. Cells
    with fewer pulses see 0 V (a no-op) for the remaining slots, so the result
    per cell matches running the same kernel on that cell alone.
    """
    x = np.asarray(x, dtype=float)
    amplitude = np.broadcast_to(np.asarray(amplitude, dtype=float), x.shape)
    pulse_width = np.broadcast_to(np.asarray(pulse_width, dtype=float), x.shape)
    count = np.broadcast_to(np.asarray(count), x.shape)
    n = int(count.max()) if count.size else 0
    if params.window_exponent == 1.0:
        # same arithmetic as advance(), with the per-pulse factor hoisted
        z = 4.0 * drive_rate(amplitude, params) * pulse_width
        e = np.exp(-np.minimum(np.abs(z), _MAX_EXPONENT))
        up, down = z > 0, z < 0
        for k in range(n):
            moved = np.where(up, x / (x + (1.0 - x) * e),
                             np.where(down, x * e / ((1.0 - x) + x * e), x))
            x = np.where(k < count, moved, x)
        return x
    for k in range(n):
        v = np.where(k < count, amplitude, 0.0)
        x = advance(x, v, pulse_width, params)
    return x


# -- I-V characterisation ----------------------------------------------------

def iv_sweep(spec: SweepSpec, params: DeviceParams,
             initial: MemristorState) -> list[SweepSample]:
    """Sine sweep through a series resistor; one sample per ``1/(f*spp)`` s."""
    dt = 1.0 / (spec.frequency * spec.samples_per_period)
    amp = spec.peak_to_peak / 2.0
    x = initial.x
    trace = []
    for k in range(spec.samples_per_period * spec.periods):
        t = k * dt
        applied = amp * math.sin(2.0 * math.pi * spec.frequency * t)
        r = resistance_from_x(x, params)
        vd = applied - applied * spec.series_resistance / (r + spec.series_resistance)
        trace.append(SweepSample(t, applied, vd, vd / r, x))
        x = advance(x, vd, dt, params)
    return trace


def loop_metrics(trace: list[SweepSample], samples_per_period: int,
                 pinch_tol: float = 1e-6) -> dict:
    """Pinch and enclosed-area summary of the last full period of a sweep.

    ``pinch_current`` is the largest |I| among samples where the applied
    voltage crosses zero; ``area`` is the shoelace area of the (V, I) loop.
    """
    last = trace[-samples_per_period:]
    v = np.array([s.device_v for s in last] + [last[0].device_v])
    i = np.array([s.current_a for s in last] + [last[0].current_a])
    area = 0.5 * abs(float(np.sum(v[:-1] * i[1:] - v[1:] * i[:-1])))
    applied = np.array([s.applied_v for s in trace])
    amp = np.max(np.abs(applied))
    near_zero = np.abs(applied) <= 1e-9 * max(amp, 1e-300)
    crossings = np.nonzero(near_zero)[0]
    cur = np.array([s.current_a for s in trace])
    pinch = float(np.max(np.abs(cur[crossings]))) if crossings.size else float("nan")
    xs = np.array([s.x for s in trace])
    hysteretic = bool(np.ptp(xs) > 0.0)
    return {
        "pinch_current": pinch,
        "area": area,
        "hysteretic": hysteretic,
        "pinched": bool(crossings.size and pinch <= pinch_tol),
        "passed": bool(crossings.size and pinch <= pinch_tol and area > 0.0 and hysteretic),
    }
