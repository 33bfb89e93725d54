"""sRGB to CIELAB conversion and per-frame color statistics.

All conversions run in float64 from the exact 8-bit inputs; nothing is
quantized back to integer LAB. Because a channel can only take 256 values,
the gamma expansion and the matrix products are precomputed per channel,
which keeps the hot path to three table lookups, two adds, and the CIE
f(t) transfer per pixel.
"""
from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np

from .errors import PrismError

# Row-major sRGB -> XYZ (D65) matrix and reference white.
_M_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])

# CIE f(t) linear-segment constants: (6/29)^3 and 29^3/3^3.
_EPSILON = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0

# Pixels per partial block when averaging a frame. The partition depends
# only on the frame size, never on the worker count, so reductions are
# bit-identical at any parallelism setting.
_BLOCK_PIXELS = 65536


def _inverse_gamma(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


# 256-entry channel tables: linear-light value of every 8-bit code, then the
# per-channel contribution to each normalized XYZ component (the division by
# the reference white is folded into the table).
_LINEAR = _inverse_gamma(np.arange(256, dtype=np.float64) / 255.0)
_CHANNEL_LUT = np.empty((3, 3, 256), dtype=np.float64)
for _i in range(3):
    for _j in range(3):
        _CHANNEL_LUT[_i, _j] = _M_RGB_TO_XYZ[_i, _j] * _LINEAR / _WHITE[_i]
_CHANNEL_LUT.setflags(write=False)


def as_rgb8(rgb: object) -> np.ndarray:
    """Coerce an array-like of 8-bit RGB values to uint8 with shape (..., 3).

    Integer inputs outside [0, 255] and non-integer dtypes are rejected
    rather than wrapped or truncated.
    """
    arr = np.asarray(rgb)
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise PrismError(f"RGB values must be integers, got dtype {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise PrismError("RGB values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    if arr.ndim == 0 or arr.shape[-1] != 3:
        raise PrismError(f"expected shape (..., 3), got {arr.shape}")
    return arr


def srgb_to_lab(rgb: object) -> np.ndarray:
    """Convert 8-bit sRGB to CIELAB (D65), elementwise over shape (..., 3).

    The pipeline is: normalize to [0, 1], sRGB inverse gamma, linear
    RGB -> XYZ, then L*a*b* via the CIE cube-root transfer. A single pixel
    in gives a float64 triple out; arrays convert in bulk along the last
    axis. Every 8-bit input is valid.
    """
    arr = as_rgb8(rgb)
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    fx = _f(_CHANNEL_LUT[0, 0][r] + _CHANNEL_LUT[0, 1][g] + _CHANNEL_LUT[0, 2][b])
    fy = _f(_CHANNEL_LUT[1, 0][r] + _CHANNEL_LUT[1, 1][g] + _CHANNEL_LUT[1, 2][b])
    fz = _f(_CHANNEL_LUT[2, 0][r] + _CHANNEL_LUT[2, 1][g] + _CHANNEL_LUT[2, 2][b])
    lab = np.empty(arr.shape, dtype=np.float64)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _EPSILON, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)


@dataclass(eq=False)
class Frame:
    """One decoded video frame: a position in the stream plus RGB pixels.

    pixels is a (height, width, 3) uint8 array in row-major order.
    """

    index: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.index, int) or self.index < 0:
            raise PrismError(f"frame index must be a non-negative int, got {self.index!r}")
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise PrismError(f"frame pixels must be uint8, got dtype {px.dtype}")
        if px.ndim != 3 or px.shape[2] != 3:
            raise PrismError(f"frame pixels must have shape (h, w, 3), got {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise PrismError("frame dimensions must be positive")
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def frame_mean_lab(frame: Frame, pool: Executor | None = None) -> np.ndarray:
    """Mean CIELAB triple of a frame, averaged in LAB space.

    Pixels are converted individually and reduced in row-major order as
    fixed-size block partials combined in index order, so the result is
    bit-identical across runs and across worker counts. Each partial sums
    deviations from the first pixel's LAB value rather than raw values;
    for a uniform frame every deviation is exactly zero, making the mean
    exactly srgb_to_lab of its pixel, and for everything else the smaller
    magnitudes lose less precision.

    pool, when given, maps block conversions onto worker threads. The
    block partition depends only on pixel count, so pooled and serial
    runs agree bitwise.
    """
    flat = frame.pixels.reshape(-1, 3)
    n = flat.shape[0]
    anchor = srgb_to_lab(flat[0])
    blocks = range(0, n, _BLOCK_PIXELS)

    def partial(start: int) -> np.ndarray:
        lab = srgb_to_lab(flat[start : start + _BLOCK_PIXELS])
        return (lab - anchor).sum(axis=0)

    if pool is not None and n > _BLOCK_PIXELS:
        partials = list(pool.map(partial, blocks))
    else:
        partials = [partial(start) for start in blocks]

    total = partials[0]
    for p in partials[1:]:
        total = total + p
    return anchor + total / n
