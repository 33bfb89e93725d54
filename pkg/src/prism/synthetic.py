"""Deterministic synthetic video streams for benchmarks and self-tests.

A stream is a run of uniform color segments with a controlled amount of
perceptual noise: within a segment, frames alternate between two variants
of the segment color whose mean-LAB separation is tuned to sit just above
the JND floor (roughly 1.2 to 1.9 dE00), while segment-to-segment jumps
are far larger. That shape gives the detector a realistic statistics
population: many small surviving deltas plus a few dominant transitions.

Everything is a pure function of its arguments; there is no RNG, so two
generations of the same stream are identical down to the last byte.
"""
from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .color import Frame, srgb_to_lab
from .deltae import ciede2000
from .errors import PrismError

# Hand-ordered so every consecutive pair is far apart perceptually
# (pairwise dE00 of neighbors ranges from about 41 to 89).
DEFAULT_PALETTE: tuple[tuple[int, int, int], ...] = (
    (0, 0, 0),        # black
    (230, 220, 40),   # yellow
    (40, 60, 200),    # blue
    (255, 255, 255),  # white
    (200, 30, 30),    # red
    (40, 200, 210),   # cyan
    (110, 40, 160),   # purple
    (40, 160, 60),    # green
    (200, 40, 190),   # magenta
    (20, 120, 110),   # teal
)

DEFAULT_SEGMENT_LENGTH = 20

# Acceptable mean-LAB separation between the two in-segment variants.
_NOISE_LOW = 1.05
_NOISE_HIGH = 1.95
_NOISE_TARGET = 1.6
_CHANNEL_STEPS = (2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128)


def transition_frames(n_frames: int, segment_length: int = DEFAULT_SEGMENT_LENGTH) -> list[int]:
    """Ground-truth keyframes of a generated stream: the first frame of
    every segment after the first."""
    return list(range(segment_length, n_frames, segment_length))


def _shifted(base: tuple[int, int, int], step: int) -> tuple[int, int, int]:
    # Step away from the nearer gamut boundary so the shift never clips.
    direction = -1 if sum(base) >= 3 * 128 else 1
    return tuple(min(255, max(0, c + direction * step)) for c in base)


def _mix_mean_lab(lab_base: np.ndarray, lab_shift: np.ndarray, m: int, n: int) -> np.ndarray:
    return ((n - m) * lab_base + m * lab_shift) / n


def _tune_noise(base: tuple[int, int, int], n_pixels: int) -> tuple[tuple[int, int, int], int]:
    """Pick a shift color and pixel count whose mixture moves the frame
    mean by roughly the JND-adjacent target. Deterministic grid search."""
    lab_base = srgb_to_lab(base)
    best: tuple[float, tuple[int, int, int], int] | None = None
    for step in _CHANNEL_STEPS:
        shift = _shifted(base, step)
        if shift == base:
            continue
        lab_shift = srgb_to_lab(shift)
        full = ciede2000(lab_base, lab_shift)
        if full <= 0:
            continue
        # Pixel count whose mixture lands nearest the target separation.
        m = max(1, min(n_pixels // 2, round(_NOISE_TARGET / full * n_pixels)))
        for candidate in (m - 1, m, m + 1):
            if candidate < 1 or candidate > n_pixels // 2:
                continue
            sep = ciede2000(lab_base, _mix_mean_lab(lab_base, lab_shift, candidate, n_pixels))
            miss = abs(sep - _NOISE_TARGET)
            if best is None or miss < best[0]:
                best = (miss, shift, candidate)
    if best is None or best[0] > (_NOISE_HIGH - _NOISE_TARGET):
        raise PrismError(f"cannot tune noise for color {base} at {n_pixels} pixels")
    return best[1], best[2]


def _segment_variants(base: tuple[int, int, int], width: int, height: int,
                      noise: bool) -> tuple[np.ndarray, np.ndarray]:
    plain = np.empty((height, width, 3), dtype=np.uint8)
    plain[:] = base
    if not noise:
        plain.setflags(write=False)
        return plain, plain
    shift, m = _tune_noise(base, width * height)
    noisy = plain.copy()
    noisy.reshape(-1, 3)[:m] = shift
    plain.setflags(write=False)
    noisy.setflags(write=False)
    return plain, noisy


def synthetic_frames(
    n_frames: int,
    width: int,
    height: int,
    segment_length: int = DEFAULT_SEGMENT_LENGTH,
    palette: Sequence[tuple[int, int, int]] | None = None,
    noise: bool = True,
) -> Iterator[Frame]:
    """Generate a segmented uniform-color stream of n_frames frames.

    Segments cycle through the palette, segment_length frames each. With
    noise enabled, frames inside a segment alternate between the plain
    color and its tuned variant, so consecutive same-segment frames
    differ by just over one JND while transitions stay dominant.

    The per-segment pixel buffers are built once and shared by every
    frame that uses them, which keeps generation cheap enough to sit
    inside a timed benchmark loop.
    """
    if n_frames < 0:
        raise PrismError(f"n_frames must be >= 0, got {n_frames}")
    if width <= 0 or height <= 0:
        raise PrismError(f"frame dimensions must be positive, got {width}x{height}")
    if segment_length < 1:
        raise PrismError(f"segment_length must be >= 1, got {segment_length}")
    colors = tuple(palette) if palette is not None else DEFAULT_PALETTE
    if not colors:
        raise PrismError("palette must not be empty")

    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for index in range(n_frames):
        segment, offset = divmod(index, segment_length)
        color_idx = segment % len(colors)
        if color_idx not in cache:
            cache[color_idx] = _segment_variants(colors[color_idx], width, height, noise)
        plain, noisy = cache[color_idx]
        yield Frame(index, plain if offset % 2 == 0 else noisy)
