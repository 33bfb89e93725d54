"""Keyframe detection from consecutive-frame color differences.

A video stream is reduced to one scalar per frame pair: the CIEDE2000
distance between the mean LAB colors of adjacent frames. Differences
below the just-noticeable-difference floor are discarded as imperceptible,
and an adaptive threshold of mean + multiplier * stddev over the surviving
differences picks out the transitions. The frame a selected difference
leads into is reported as the keyframe.

Everything here consumes frames strictly one at a time; only the previous
frame's mean triple is carried, so memory stays flat no matter how long
the stream is.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import numpy as np
from sklearn.base import BaseEstimator

from .color import Frame, frame_mean_lab
from .deltae import ciede2000
from .errors import PrismError

DEFAULT_JND = 1.0
DEFAULT_SIGMA_MULTIPLIER = 1.0

_TRACE_COLUMNS = "frame_index,delta_e00,passed_jnd,selected"


def resolve_threads(threads: int | None = None) -> int:
    """Effective worker count: explicit argument, else the PRISM_THREADS
    environment cap, else machine parallelism."""
    if threads is None:
        env = os.environ.get("PRISM_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError:
                raise PrismError(f"PRISM_THREADS must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise PrismError(f"thread count must be >= 1, got {threads}")
    return threads


@dataclass
class DeltaSeries:
    """Per-pair CIEDE2000 differences for a stream of total_frames frames.

    deltas[i] is the distance between the mean colors of frames i and
    i + 1; jnd_mask[i] records whether it reached the JND floor.
    """

    deltas: np.ndarray
    jnd_mask: np.ndarray
    jnd_threshold: float
    total_frames: int

    def __post_init__(self) -> None:
        self.deltas = np.asarray(self.deltas, dtype=np.float64)
        self.jnd_mask = np.asarray(self.jnd_mask, dtype=bool)
        if self.deltas.ndim != 1 or self.deltas.shape != self.jnd_mask.shape:
            raise PrismError("deltas and jnd_mask must be 1-d arrays of equal length")
        if self.total_frames != len(self.deltas) + 1:
            raise PrismError(
                f"total_frames must be len(deltas) + 1, got {self.total_frames} "
                f"for {len(self.deltas)} deltas"
            )

    @property
    def stable(self) -> bool:
        """True when no difference reached the JND floor."""
        return not bool(self.jnd_mask.any())


@dataclass
class KeyframeResult:
    """Detection outcome plus the statistics that produced it."""

    keyframes: list[int]
    mu: float
    sigma: float
    threshold: float
    total_frames: int
    stable: bool
    jnd_threshold: float = DEFAULT_JND
    sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER
    include_first_frame: bool = False


def _check_params(jnd_threshold: float, sigma_multiplier: float) -> None:
    if jnd_threshold < 0:
        raise PrismError(f"jnd_threshold must be >= 0, got {jnd_threshold}")
    if sigma_multiplier <= 0:
        raise PrismError(f"sigma_multiplier must be > 0, got {sigma_multiplier}")


def build_delta_series(
    frames: Iterable[Frame],
    jnd_threshold: float = DEFAULT_JND,
    threads: int | None = None,
) -> DeltaSeries:
    """Stream frames once and compute the consecutive-pair delta series.

    Frames must arrive with consecutive indices starting at 0. A stream
    with zero frames is an error ("no frames"); a single frame yields an
    empty series. Worker threads, when enabled, parallelize the pixel
    conversion inside one frame; the reduction order is fixed, so the
    series is bit-identical at any thread count.
    """
    _check_params(jnd_threshold, DEFAULT_SIGMA_MULTIPLIER)
    n_workers = resolve_threads(threads)
    pool = ThreadPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    try:
        return _consume(frames, jnd_threshold, pool)
    finally:
        if pool is not None:
            pool.shutdown()


def _consume(frames: Iterable[Frame], jnd_threshold: float, pool) -> DeltaSeries:
    deltas: list[float] = []
    prev_mean: np.ndarray | None = None
    count = 0
    for frame in frames:
        if frame.index != count:
            raise PrismError(f"frame gap: expected index {count}, got {frame.index}")
        mean = frame_mean_lab(frame, pool=pool)
        if prev_mean is not None:
            deltas.append(ciede2000(prev_mean, mean))
        prev_mean = mean
        count += 1
    if count == 0:
        raise PrismError("no frames in stream")
    arr = np.array(deltas, dtype=np.float64)
    mask = arr >= jnd_threshold
    return DeltaSeries(arr, mask, jnd_threshold, count)


def adaptive_stats(series: DeltaSeries) -> tuple[float, float]:
    """Mean and population standard deviation of the JND-surviving deltas.

    A series where nothing survived is reported as (0.0, 0.0); callers can
    distinguish that stable case via series.stable.
    """
    survivors = series.deltas[series.jnd_mask]
    if survivors.size == 0:
        return 0.0, 0.0
    return float(survivors.mean()), float(survivors.std())


def select_keyframes(
    series: DeltaSeries,
    sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER,
    include_first_frame: bool = False,
) -> KeyframeResult:
    """Apply the adaptive threshold to a finished delta series.

    A delta is selected only if it survived the JND gate and strictly
    exceeds mu + sigma_multiplier * sigma; the keyframe reported for
    deltas[i] is frame i + 1, the frame the change leads into. With
    include_first_frame, index 0 is prepended as a summary anchor.
    """
    _check_params(series.jnd_threshold, sigma_multiplier)
    mu, sigma = adaptive_stats(series)
    threshold = mu + sigma_multiplier * sigma
    picked = series.jnd_mask & (series.deltas > threshold)
    keyframes = [int(i) + 1 for i in np.flatnonzero(picked)]
    if include_first_frame:
        keyframes = [0] + keyframes
    return KeyframeResult(
        keyframes=keyframes,
        mu=mu,
        sigma=sigma,
        threshold=threshold,
        total_frames=series.total_frames,
        stable=series.stable,
        jnd_threshold=series.jnd_threshold,
        sigma_multiplier=sigma_multiplier,
        include_first_frame=include_first_frame,
    )


def detect_keyframes(
    frames: Iterable[Frame],
    jnd_threshold: float = DEFAULT_JND,
    sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER,
    include_first_frame: bool = False,
    threads: int | None = None,
) -> KeyframeResult:
    """One-shot detection over a frame stream. A single-frame stream gives
    an empty, stable result; an empty stream is a "no frames" error."""
    _check_params(jnd_threshold, sigma_multiplier)
    series = build_delta_series(frames, jnd_threshold, threads)
    return select_keyframes(series, sigma_multiplier, include_first_frame)


def write_delta_trace(out: str | os.PathLike | IO[str], series: DeltaSeries,
                      result: KeyframeResult) -> None:
    """Write the per-delta audit table as CSV.

    Header comment lines carry the run statistics; each data row is the
    frame a delta leads into, the delta value at full float precision,
    and the two gate flags. repr() formatting makes the floats round-trip
    exactly through read_delta_trace.
    """
    if hasattr(out, "write"):
        _write_trace(out, series, result)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            _write_trace(fh, series, result)


def _write_trace(fh: IO[str], series: DeltaSeries, result: KeyframeResult) -> None:
    fh.write(f"# mu={result.mu!r}\n")
    fh.write(f"# sigma={result.sigma!r}\n")
    fh.write(f"# threshold={result.threshold!r}\n")
    fh.write(f"# jnd_threshold={series.jnd_threshold!r}\n")
    fh.write(f"# total_frames={series.total_frames}\n")
    fh.write(_TRACE_COLUMNS + "\n")
    picked = series.jnd_mask & (series.deltas > result.threshold)
    for i, delta in enumerate(series.deltas):
        fh.write(
            f"{i + 1},{float(delta)!r},"
            f"{'true' if series.jnd_mask[i] else 'false'},"
            f"{'true' if picked[i] else 'false'}\n"
        )


def read_delta_trace(source: str | os.PathLike | IO[str]) -> tuple[dict, DeltaSeries]:
    """Parse a trace written by write_delta_trace back into its statistics
    dict and DeltaSeries. Values round-trip bit-exactly."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()

    meta: dict[str, float | int] = {}
    rows: list[tuple[int, float, bool, bool]] = []
    for line in lines:
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            key = key.strip()
            meta[key] = int(value) if key == "total_frames" else float(value)
        elif line != _TRACE_COLUMNS:
            idx, delta, passed, selected = line.split(",")
            rows.append((int(idx), float(delta), passed == "true", selected == "true"))

    for required in ("mu", "sigma", "threshold", "jnd_threshold", "total_frames"):
        if required not in meta:
            raise PrismError(f"trace missing header field: {required}")
    series = DeltaSeries(
        np.array([r[1] for r in rows], dtype=np.float64),
        np.array([r[2] for r in rows], dtype=bool),
        float(meta["jnd_threshold"]),
        int(meta["total_frames"]),
    )
    return meta, series


class KeyframeDetector(BaseEstimator):
    """Estimator-style wrapper around detect_keyframes.

    Follows the fit conventions of scikit-learn clusterers: construction
    only stores parameters, fit consumes an iterable of Frame objects and
    exposes the outcome through trailing-underscore attributes, and
    get_params / set_params / clone compose with the usual tooling.

    Parameters
    ----------
    jnd_threshold : float, default 1.0
        Floor below which a color difference is treated as imperceptible.
    sigma_multiplier : float, default 1.0
        Width of the adaptive band above the mean surviving delta.
    include_first_frame : bool, default False
        Prepend frame 0 to the reported keyframes.
    threads : int or None, default None
        Worker cap for pixel conversion; None defers to PRISM_THREADS or
        the machine's CPU count. Has no effect on results.
    """

    def __init__(
        self,
        jnd_threshold: float = DEFAULT_JND,
        sigma_multiplier: float = DEFAULT_SIGMA_MULTIPLIER,
        include_first_frame: bool = False,
        threads: int | None = None,
    ):
        self.jnd_threshold = jnd_threshold
        self.sigma_multiplier = sigma_multiplier
        self.include_first_frame = include_first_frame
        self.threads = threads

    def fit(self, X: Iterable[Frame], y=None) -> "KeyframeDetector":
        """Consume a frame stream and detect its keyframes."""
        series = build_delta_series(X, self.jnd_threshold, self.threads)
        result = select_keyframes(series, self.sigma_multiplier, self.include_first_frame)
        self.series_ = series
        self.result_ = result
        self.keyframes_ = result.keyframes
        self.mu_ = result.mu
        self.sigma_ = result.sigma
        self.threshold_ = result.threshold
        self.total_frames_ = result.total_frames
        self.stable_ = result.stable
        return self

    def fit_predict(self, X: Iterable[Frame], y=None) -> np.ndarray:
        """Fit on a stream and return the keyframe indices as an array."""
        return np.asarray(self.fit(X).keyframes_, dtype=np.int64)
