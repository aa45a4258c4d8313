"""Seeded synthetic SMLM frames: random molecules, blur, downsampling, Poisson noise.

Randomness comes from NumPy's Philox-4x64 counter-based generator. Frame
``f`` of stream ``s`` under seed ``seed`` uses the 128-bit key
``(s << 64) | (seed XOR f)``, so every frame can be regenerated on its own.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .localizations import LocalizationSet
from .operator import ForwardOperator, GridSpec

RNG_NAME = "numpy.Philox4x64-10"
STREAM_PLACE = 1
STREAM_NOISE = 2
MASK64 = (1 << 64) - 1


def frame_rng(seed: int, frame: int, stream: int) -> np.random.Generator:
    key = (int(stream) << 64) | ((int(seed) ^ int(frame)) & MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def place_molecules(grid: GridSpec, n_per_frame: int, n_frames: int = 1,
                    intensity_range=(500.0, 2000.0), seed: int = 0) -> LocalizationSet:
    """Uniformly placed molecules with uniform intensities, ``n_per_frame`` per frame."""
    if n_per_frame < 0 or n_frames < 0:
        raise ParameterError("molecule and frame counts must be nonnegative")
    lo, hi = intensity_range
    if not 0 < lo <= hi:
        raise ParameterError(f"invalid intensity range {intensity_range}")
    width = grid.field_nm
    parts = []
    for f in range(n_frames):
        rng = frame_rng(seed, f, STREAM_PLACE)
        xy = rng.uniform(0.0, width, size=(n_per_frame, 2))
        xy = np.minimum(xy, np.nextafter(width, 0.0))
        amp = rng.uniform(lo, hi, size=n_per_frame)
        parts.append(LocalizationSet(np.full(n_per_frame, f), xy[:, 0], xy[:, 1], amp))
    return LocalizationSet.concat(parts)


def render_ground_truth(mols: LocalizationSet, grid: GridSpec):
    """Accumulate molecule intensities into their fine pixels (flat ``N**2`` image)."""
    N = grid.N
    img = np.zeros((N, N))
    if len(mols) == 0:
        return img.ravel()
    rc = mols.fine_pixels(grid.fine_pixel_nm)
    if np.any(rc < 0) or np.any(rc >= N):
        raise ParameterError("molecule outside the field of view")
    np.add.at(img, (rc[:, 0], rc[:, 1]), mols.intensity)
    return img.ravel()


def poisson_acquire(x_gt, op: ForwardOperator, background: float = 1.0, seed: int = 0,
                    frame: int = 0):
    """Poisson counts with mean ``A x_gt + background`` (``uint32``, flat ``M**2``)."""
    x_gt = np.asarray(x_gt, dtype=float).ravel()
    if np.any(x_gt < 0):
        raise ParameterError("ground truth must be nonnegative")
    if background < 0:
        raise ParameterError("background must be nonnegative")
    rate = op.forward(x_gt) + background
    scale = max(1.0, float(np.max(np.abs(rate))))
    if np.any(rate < -1e-9 * scale):
        raise RuntimeError("negative Poisson rate")
    rate = np.maximum(rate, 0.0)
    return frame_rng(seed, frame, STREAM_NOISE).poisson(rate).astype(np.uint32)


@dataclass
class FrameStack:
    grid: GridSpec
    frames: np.ndarray
    ground_truth: LocalizationSet | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m2 = self.grid.M ** 2
        self.frames = np.asarray(self.frames, dtype=np.uint32).reshape(-1, m2)

    def __len__(self):
        return self.frames.shape[0]


def simulate_stack(op: ForwardOperator, n_frames: int, n_per_frame: int,
                   intensity_range=(500.0, 2000.0), background: float = 1.0,
                   seed: int = 0) -> FrameStack:
    grid = op.grid
    truth = place_molecules(grid, n_per_frame, n_frames, intensity_range, seed)
    frames = np.zeros((n_frames, grid.M ** 2), dtype=np.uint32)
    for f in range(n_frames):
        x_gt = render_ground_truth(truth.for_frame(f), grid)
        frames[f] = poisson_acquire(x_gt, op, background, seed, frame=f)
    meta = {"seed": int(seed), "rng": RNG_NAME, "background": float(background)}
    return FrameStack(grid, frames, truth, meta)
