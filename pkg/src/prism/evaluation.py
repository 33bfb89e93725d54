"""Accuracy, fidelity, compression, and throughput scoring.

Accuracy follows the FPS-scaled temporal matching procedure: a prediction
counts when some ground-truth index lies within a window derived from the
video's frame rate, clamped to [30, 3% of length]. Fidelity compares
normalized color histograms of the selected and reference frames through
cosine similarity, aggregated as a semi-Hausdorff score. Compression is
plain frame arithmetic. Throughput wall-clocks the detector itself.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from .color import Frame
from .detector import (
    DEFAULT_JND,
    DEFAULT_SIGMA_MULTIPLIER,
    detect_keyframes,
)
from .errors import PrismError

MIN_MATCH_WINDOW = 30
MAX_WINDOW_FRACTION = 0.03
FIDELITY_MODES = ("default", "literal")

_HIST_BINS = 32
_HIST_SHIFT = 3  # 256 values / 32 bins = 8 wide, i.e. value >> 3


def matching_threshold(fps: float, frame_count: int) -> int:
    """Temporal matching window in frames for one video.

    The window is trunc(fps * time_scaling) with time_scaling =
    10.0 * fps / (fps + 10), clamped into [30, trunc(3% of length)] by
    applying the lower bound first, then the upper; when the bounds cross
    on short videos the upper bound wins.
    """
    if fps <= 0 or frame_count <= 0:
        raise PrismError(f"matching_threshold needs fps > 0 and frame_count > 0, "
                         f"got fps={fps}, frame_count={frame_count}")
    time_scaling = 10.0 * fps / (fps + 10)
    threshold = int(fps * time_scaling)
    threshold = max(threshold, MIN_MATCH_WINDOW)
    threshold = min(threshold, int(frame_count * MAX_WINDOW_FRACTION))
    return threshold


@dataclass(frozen=True)
class MatchReport:
    threshold_frames: int
    matched: int
    accuracy_pct: float


def match_count(actual: Sequence[int], predicted: Sequence[int], threshold: int) -> int:
    """Number of predictions with some actual index within +-threshold."""
    return sum(1 for p in predicted if any(abs(p - a) <= threshold for a in actual))


def _round2_half_away(value: float) -> float:
    # repr() round-trips the float exactly; ROUND_HALF_UP on a non-negative
    # value is rounding half away from zero.
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def score_matching(fps: float, frame_count: int, actual: Sequence[int],
                   predicted: Sequence[int]) -> MatchReport:
    """Accuracy of predicted keyframes against ground truth.

    Returns 0.0 without computing a window when the prediction list is
    empty or the video reports fps = 0 or frame_count = 0. Otherwise the
    accuracy is matched / len(predicted) * 100, rounded half away from
    zero to two decimals.
    """
    if not predicted or fps == 0 or frame_count == 0:
        return MatchReport(threshold_frames=0, matched=0, accuracy_pct=0.0)
    threshold = matching_threshold(fps, frame_count)
    matched = match_count(actual, predicted, threshold)
    pct = _round2_half_away(matched / len(predicted) * 100.0)
    return MatchReport(threshold_frames=threshold, matched=matched, accuracy_pct=pct)


def color_histogram(frame: Frame | np.ndarray) -> np.ndarray:
    """Normalized 96-bin color signature of a frame.

    32 bins per channel over the 8-bit range (bin k covers values
    8k..8k+7), concatenated R, G, B and divided by 3 * pixel_count, so
    the whole vector carries unit mass.
    """
    pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise PrismError(f"histogram needs (h, w, 3) uint8 pixels, got "
                         f"{pixels.shape} {pixels.dtype}")
    binned = pixels >> _HIST_SHIFT
    hist = np.empty(3 * _HIST_BINS, dtype=np.float64)
    for c in range(3):
        hist[c * _HIST_BINS : (c + 1) * _HIST_BINS] = np.bincount(
            binned[:, :, c].reshape(-1), minlength=_HIST_BINS
        )
    total = 3 * pixels.shape[0] * pixels.shape[1]
    return hist / total


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    u = np.asarray(a, dtype=np.float64).reshape(-1)
    v = np.asarray(b, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise PrismError(f"vector length mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise PrismError("cosine similarity undefined for a zero vector")
    if np.array_equal(u, v):
        # Equal vectors have similarity 1 by definition; computing it
        # would lose the identity to rounding in the final bit.
        return 1.0
    return float(u @ v) / (nu * nv)


def fidelity(predicted_frames: Sequence[Frame], truth_frames: Sequence[Frame],
             mode: str = "default") -> float:
    """Content preservation of predicted keyframes against reference ones.

    Default mode scores 1 - max over predictions of the min cosine
    DISTANCE to any reference frame (a semi-Hausdorff distance), so a
    prediction set that reproduces the references exactly scores 1.0.
    The "literal" mode instead evaluates 1 - max_i(min_j CosSim) as the
    summary formula is sometimes typeset; under it identical sets score
    0.0, which is why it exists only for auditing.
    """
    hp = [color_histogram(f) for f in predicted_frames]
    ht = [color_histogram(f) for f in truth_frames]
    return fidelity_from_histograms(hp, ht, mode)


def fidelity_from_histograms(predicted: Sequence[np.ndarray],
                             truth: Sequence[np.ndarray],
                             mode: str = "default") -> float:
    if mode not in FIDELITY_MODES:
        raise PrismError(f"fidelity mode must be one of {FIDELITY_MODES}, got {mode!r}")
    if not len(predicted) or not len(truth):
        raise PrismError("fidelity undefined for empty frame sets")
    if mode == "default":
        worst = max(min(1.0 - cosine_similarity(p, t) for t in truth) for p in predicted)
    else:
        worst = max(min(cosine_similarity(p, t) for t in truth) for p in predicted)
    return 1.0 - worst


@dataclass(frozen=True)
class CompressionStats:
    ratio: float  # inf when no keyframes were selected
    pct: float

    @property
    def undefined(self) -> bool:
        return not np.isfinite(self.ratio)


def compression(total_frames: int, keyframes: int) -> CompressionStats:
    """Summary size bookkeeping: ratio total/selected and the percentage
    of frames removed. Zero keyframes gives an infinite, flagged ratio;
    zero total frames is an error."""
    if total_frames == 0:
        raise PrismError("compression undefined for zero total frames")
    if total_frames < 0 or keyframes < 0 or keyframes > total_frames:
        raise PrismError(f"need 0 <= keyframes <= total_frames, got "
                         f"{keyframes} of {total_frames}")
    ratio = float("inf") if keyframes == 0 else total_frames / keyframes
    pct = (1.0 - keyframes / total_frames) * 100.0
    return CompressionStats(ratio=ratio, pct=pct)


@dataclass(frozen=True)
class ThroughputReport:
    frames: int
    width: int
    height: int
    elapsed_s: float
    fps: float
    n_keyframes: int


def measure_throughput(frames: Iterable[Frame],
                       jnd_threshold: float = DEFAULT_JND,
                       sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER,
                       threads: int | None = None) -> ThroughputReport:
    """Wall-clock a full detection pass and report frames per second.

    The caller supplies pre-buffered or cheaply generated frames so the
    timing isolates detection, not decoding. Needs at least 2 frames to
    time something meaningful. Keyframe output is deterministic across
    runs; elapsed time of course is not.
    """
    dims: list[tuple[int, int]] = []

    def watching() -> Iterable[Frame]:
        for frame in frames:
            if not dims:
                dims.append((frame.width, frame.height))
            yield frame

    start = time.perf_counter()
    result = detect_keyframes(watching(), jnd_threshold=jnd_threshold,
                              sigma_multiplier=sigma_multiplier, threads=threads)
    elapsed = time.perf_counter() - start
    if result.total_frames < 2:
        raise PrismError(f"need ≥ 2 frames to measure throughput, got {result.total_frames}")
    width, height = dims[0]
    return ThroughputReport(
        frames=result.total_frames,
        width=width,
        height=height,
        elapsed_s=elapsed,
        fps=result.total_frames / elapsed if elapsed > 0 else float("inf"),
        n_keyframes=len(result.keyframes),
    )
