"""Visual differential pipeline on a memristor array.

Frames are block-averaged to a small grid; the per-cell frame difference is
classed Fast or Slow and encoded as pulses on that cell's memristor. Fast
changes set a cell to low resistance (salient); Slow cells get a fixed
negative release train every frame, so a salient cell fades back to high
resistance over several frames and leaves an afterimage trail.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .device import DeviceParams, apply_trains, resistance_from_x, x_from_resistance
from .encoding import INTENSITY_MAX, SchemeTable, extract_visual_grid, visual_trains
from .errors import InvalidInput


@dataclass(frozen=True)
class Frame:
    """Grayscale frame, intensities in [0, 2.56], shape (height, width)."""
    intensities: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.intensities, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise InvalidInput(f"frame must be a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > INTENSITY_MAX:
            raise InvalidInput(f"frame intensities must lie in [0, {INTENSITY_MAX}]")
        object.__setattr__(self, "intensities", a)

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @classmethod
    def from_uint8(cls, pixels: np.ndarray) -> "Frame":
        """8-bit grayscale mapped as value / 100."""
        return cls(np.asarray(pixels, dtype=np.uint8) / 100.0)


@dataclass(frozen=True)
class GridSpec:
    cols: int = 40
    rows: int = 25
    block_w: int = 48
    block_h: int = 36

    def __post_init__(self):
        if min(self.cols, self.rows, self.block_w, self.block_h) < 1:
            raise InvalidInput("grid dimensions must be positive")

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.rows * self.block_h, self.cols * self.block_w

    @classmethod
    def for_frame(cls, width: int, height: int, cols: int = 40, rows: int = 25) -> "GridSpec":
        if width % cols or height % rows:
            raise InvalidInput(
                f"{width}x{height} frame does not divide into {cols}x{rows} blocks")
        return cls(cols, rows, width // cols, height // rows)


def compress(frame: Frame | np.ndarray, spec: GridSpec) -> np.ndarray:
    """Block means, shape (rows, cols).

    ``frame`` may be a :class:`Frame`, a uint8 image (mapped as value / 100)
    or a float intensity array.
    """
    if isinstance(frame, Frame):
        a = frame.intensities
        raw8 = False
    else:
        a = np.asarray(frame)
        raw8 = a.dtype == np.uint8
    if a.shape != spec.frame_shape:
        raise InvalidInput(f"frame shape {a.shape} does not match grid {spec.frame_shape}")
    r, c = spec.rows, spec.cols
    if raw8:
        # integer block sums are exact; column sums fit uint16 for blocks up
        # to 257 rows, which halves the memory traffic of the first pass
        acc = np.uint16 if spec.block_h <= 257 else np.uint32
        s = a.reshape(r, spec.block_h, c * spec.block_w).sum(axis=1, dtype=acc)
        s = s.reshape(r, c, spec.block_w).sum(axis=2, dtype=np.uint64)
        return s / (100.0 * spec.block_w * spec.block_h)
    if not isinstance(frame, Frame):
        a = Frame(a).intensities
    g = a.reshape(r, spec.block_h, c, spec.block_w).mean(axis=(1, 3))
    # a block mean can round a hair past the scale ends
    return np.clip(g, 0.0, INTENSITY_MAX)


@dataclass
class ArrayState:
    """Per-cell memristor state variables, shape (rows, cols)."""
    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 2:
            raise InvalidInput("array state must be 2-D")
        if not np.all((self.x >= 0.0) & (self.x <= 1.0)):
            raise InvalidInput("state variables must lie in [0, 1]")

    @classmethod
    def uniform(cls, rows: int, cols: int, r: float, params: DeviceParams) -> "ArrayState":
        return cls(np.full((rows, cols), float(x_from_resistance(r, params))))

    def resistance(self, params: DeviceParams) -> np.ndarray:
        return resistance_from_x(self.x, params)


@dataclass(frozen=True)
class SaliencyMap:
    resistance: np.ndarray
    binary: np.ndarray  # 0 = low resistance (salient), 1 = high

    @classmethod
    def from_resistance(cls, r: np.ndarray, threshold: float = 100e3) -> "SaliencyMap":
        r = np.asarray(r, dtype=float)
        return cls(r, np.where(r < threshold, 0, 1).astype(np.uint8))

    @property
    def salient(self) -> np.ndarray:
        return self.binary == 0


@dataclass(frozen=True)
class PulseLog:
    amplitude: np.ndarray
    pulse_width: np.ndarray
    count: np.ndarray


def update_array(prev_grid: np.ndarray, curr_grid: np.ndarray, state: ArrayState,
                 table: SchemeTable, params: DeviceParams, fast_threshold: float = 0.30,
                 binarize_threshold: float = 100e3, sequential: bool = False,
                 ) -> tuple[ArrayState, SaliencyMap, PulseLog]:
    """Encode one frame difference into the array.

    ``sequential=True`` updates the cells one at a time; the result is
    bit-identical to the default vectorised path.
    """
    prev_grid = np.asarray(prev_grid, dtype=float)
    curr_grid = np.asarray(curr_grid, dtype=float)
    if prev_grid.shape != state.x.shape or curr_grid.shape != state.x.shape:
        raise InvalidInput(
            f"grid shapes {prev_grid.shape}/{curr_grid.shape} do not match array {state.x.shape}")
    delta, is_fast = extract_visual_grid(prev_grid, curr_grid, fast_threshold)
    r = state.resistance(params)
    amp, width, count = visual_trains(delta, is_fast, r, table)
    if sequential:
        x = np.empty_like(state.x)
        for idx in np.ndindex(x.shape):
            x[idx] = apply_trains(state.x[idx].reshape(1), amp[idx].reshape(1),
                                  width[idx].reshape(1), count[idx].reshape(1), params)[0]
    else:
        x = apply_trains(state.x, amp, width, count, params)
    new = ArrayState(x)
    smap = SaliencyMap.from_resistance(new.resistance(params), binarize_threshold)
    return new, smap, PulseLog(amp, width, count)


def release_frames_bound(r0: float, table: SchemeTable, params: DeviceParams) -> int:
    """Frames of Slow input needed to lift a cell from ``r0`` into the high band.

    Each frame's release train moves logit(x) down by a fixed amount, so the
    count follows from the logit distance to the high-band edge.
    """
    t = table.template("visual_release")
    if not t.amplitude < params.v_tn:
        raise InvalidInput("release train is inside the dead zone; cells never relax")
    step = 4.0 * params.alpha_n * (params.v_tn - t.amplitude) * t.pulse_width * t.count
    logit = lambda x: np.log(x) - np.log1p(-x)
    x0 = float(x_from_resistance(r0, params))
    x_hi = float(x_from_resistance(table.high_min, params))
    if x0 <= x_hi:
        return 0
    if x0 >= 1.0:
        raise InvalidInput("x = 1 is a fixed point; the cell cannot be released")
    return int(np.ceil((logit(x0) - logit(x_hi)) / step - 1e-9))


@dataclass
class VideoResult:
    maps: list[SaliencyMap]
    grids: list[np.ndarray]
    frame_seconds: list[float] = field(default_factory=list)
    state: ArrayState | None = None


def run_video(frames: Iterable, spec: GridSpec, table: SchemeTable, params: DeviceParams,
              initial_resistance: float = 300e3, fast_threshold: float = 0.30,
              binarize_threshold: float = 100e3, sequential: bool = False) -> VideoResult:
    """Fold :func:`update_array` over consecutive compressed frames.

    Returns one saliency map per frame after the first. ``frame_seconds``
    records compress + update wall time for each processed frame.
    """
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise InvalidInput("video needs at least 2 frames") from None
    prev = compress(first, spec)
    state = ArrayState.uniform(spec.rows, spec.cols, initial_resistance, params)
    out = VideoResult([], [prev])
    for fr in it:
        t0 = time.perf_counter()
        curr = compress(fr, spec)
        state, smap, _ = update_array(prev, curr, state, table, params, fast_threshold,
                                      binarize_threshold, sequential)
        out.frame_seconds.append(time.perf_counter() - t0)
        out.maps.append(smap)
        out.grids.append(curr)
        prev = curr
    if not out.maps:
        raise InvalidInput("video needs at least 2 frames")
    out.state = state
    return out


@dataclass(frozen=True)
class Orientation:
    direction: tuple[float, float] | None  # unit (dx, dy); +x = right, +y = down
    magnitude: float
    head: tuple[float, float] | None
    trail: tuple[float, float] | None

    @property
    def degenerate(self) -> bool:
        return self.direction is None


def _centroid(w: np.ndarray) -> tuple[float, float] | None:
    total = float(w.sum())
    if total <= 0:
        return None
    rows, cols = np.indices(w.shape)
    return float((w * cols).sum() / total), float((w * rows).sum() / total)


def estimate_orientation(maps: Sequence[SaliencyMap], r_reference: float = 250e3,
                         eps: float = 1e-9) -> Orientation:
    """Direction from the afterimage trail toward the current salient region.

    The head is the centroid of the cells that are salient in the newest map
    and were not released this frame (their resistance did not rise). The
    trail is the conductance-weighted centroid over the older maps, where
    cells that were set low and are fading back carry most of the weight.
    Only conductance above ``1 / r_reference`` (the high-band edge) counts, so
    the resting background does not pull the trail.
    """
    if len(maps) < 2:
        raise InvalidInput("orientation needs at least 2 maps")
    fresh = maps[-1].salient & (maps[-1].resistance <= maps[-2].resistance)
    head = _centroid(fresh.astype(float))
    if head is None:
        return Orientation(None, 0.0, None, None)
    w = sum(np.clip(1.0 / m.resistance - 1.0 / r_reference, 0.0, None) for m in maps[:-1])
    trail = _centroid(w)
    if trail is None:
        return Orientation(None, 0.0, head, None)
    d = np.array(head) - np.array(trail)
    mag = float(np.hypot(*d))
    if mag <= eps:
        return Orientation(None, mag, head, trail)
    return Orientation((float(d[0] / mag), float(d[1] / mag)), mag, head, trail)


def amplitude_spectrum(grid: np.ndarray) -> np.ndarray:
    """|DFT| of the grid with the zero-frequency term shifted to the centre."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2:
        raise InvalidInput("spectrum input must be a 2-D grid")
    return np.abs(np.fft.fftshift(np.fft.fft2(g)))
