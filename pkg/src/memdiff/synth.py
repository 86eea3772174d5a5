"""Seeded synthetic videos: bright rectangular objects moving over a flat
background, with the ground-truth object cells as label masks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class SyntheticVideoSpec:
    frames: int = 20
    size: tuple[int, int] = (3, 3)          # object (cols, rows) in grid cells
    velocity: tuple[int, int] = (1, 0)      # cells per frame (dx, dy)
    start: tuple[int, int] = (2, 11)        # top-left cell at start_frame
    background: float = 0.40
    intensity: float = 2.00
    noise: float = 0.0                      # uniform +-noise per pixel
    seed: int = 0
    start_frame: int = 1                    # object absent before this frame
    wrap: bool = False
    cols: int = 40
    rows: int = 25
    block_w: int = 10
    block_h: int = 10

    def __post_init__(self):
        if self.frames < 1:
            raise InvalidInput("frames must be >= 1")
        w, h = self.size
        if not (1 <= w <= self.cols and 1 <= h <= self.rows):
            raise InvalidInput(f"object {w}x{h} cells does not fit a {self.cols}x{self.rows} grid")
        for v in (self.background, self.intensity):
            if not 0.0 <= v <= 2.55:
                raise InvalidInput("intensities must lie in [0, 2.55]")
        if not 0.0 <= self.noise <= 0.05:
            raise InvalidInput("noise must lie in [0, 0.05]")
        if not self.wrap:
            for k in range(self.start_frame, self.frames):
                x, y = self.position(k)
                if x < 0 or y < 0 or x + w > self.cols or y + h > self.rows:
                    raise InvalidInput(f"object leaves the grid at frame {k}; shorten or wrap")

    @property
    def width(self) -> int:
        return self.cols * self.block_w

    @property
    def height(self) -> int:
        return self.rows * self.block_h

    def position(self, k: int) -> tuple[int, int]:
        n = k - self.start_frame
        return self.start[0] + n * self.velocity[0], self.start[1] + n * self.velocity[1]

    def mask(self, k: int) -> np.ndarray:
        m = np.zeros((self.rows, self.cols), dtype=np.uint8)
        if k < self.start_frame:
            return m
        x, y = self.position(k)
        cols = np.arange(x, x + self.size[0])
        rows = np.arange(y, y + self.size[1])
        if self.wrap:
            cols, rows = cols % self.cols, rows % self.rows
        m[np.ix_(rows, cols)] = 1
        return m


def generate(spec: SyntheticVideoSpec) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Return (uint8 frames, 0/1 label masks); pixel value = intensity * 100."""
    rng = np.random.default_rng(spec.seed)
    frames, masks = [], []
    for k in range(spec.frames):
        m = spec.mask(k)
        cells = np.where(m > 0, spec.intensity, spec.background)
        img = np.repeat(np.repeat(cells, spec.block_h, axis=0), spec.block_w, axis=1)
        if spec.noise > 0:
            img += rng.uniform(-spec.noise, spec.noise, img.shape)
        img *= 100.0
        np.rint(img, out=img)
        np.clip(img, 0, 255, out=img)
        frames.append(img.astype(np.uint8))
        masks.append(m)
    return frames, masks


def default_suite(seed: int = 2024) -> list[SyntheticVideoSpec]:
    """The shipped evaluation suite: several speeds, sizes and contrasts."""
    rng = np.random.default_rng(seed)
    cases = [
        ((3, 3), (1, 0)), ((3, 3), (-1, 0)), ((2, 2), (0, 1)), ((4, 3), (2, 0)),
        ((3, 2), (1, 1)), ((5, 4), (-2, 1)), ((2, 3), (0, -1)), ((3, 3), (3, 0)),
    ]
    out = []
    for i, (size, vel) in enumerate(cases):
        n = 12
        sx = 20 - (vel[0] * (n - 2)) // 2 - size[0] // 2
        sy = 12 - (vel[1] * (n - 2)) // 2 - size[1] // 2
        contrast = float(np.round(rng.uniform(1.2, 2.0), 2))
        bg = float(np.round(rng.uniform(0.1, 0.5), 2))
        out.append(SyntheticVideoSpec(
            frames=n, size=size, velocity=vel, start=(sx, sy), background=bg,
            intensity=round(bg + contrast, 2), noise=0.05, seed=seed + i))
    return out
