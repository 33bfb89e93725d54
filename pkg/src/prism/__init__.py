"""Training-free keyframe extraction from perceptual color-difference statistics.

The pipeline: decode frames, reduce each to its mean CIELAB color,
measure CIEDE2000 between consecutive means, gate the deltas at the
just-noticeable-difference floor, and select cuts that clear an adaptive
mu + k*sigma threshold computed over the surviving deltas.
"""
from __future__ import annotations

from .color import Frame, frame_mean_lab, srgb_to_lab
from .deltae import ciede2000
from .detector import (
    DEFAULT_JND,
    DEFAULT_SIGMA_MULTIPLIER,
    DeltaSeries,
    KeyframeDetector,
    KeyframeResult,
    adaptive_stats,
    build_delta_series,
    detect_keyframes,
    read_delta_trace,
    resolve_threads,
    select_keyframes,
    write_delta_trace,
)
from .errors import PrismError
from .evaluation import (
    CompressionStats,
    MatchReport,
    ThroughputReport,
    color_histogram,
    compression,
    cosine_similarity,
    fidelity,
    fidelity_from_histograms,
    match_count,
    matching_threshold,
    measure_throughput,
    score_matching,
)
from .ingest import (
    GroundTruth,
    VideoMeta,
    load_frames_at,
    load_ground_truth,
    load_ground_truth_corpus,
    open_image_sequence,
    open_raw_rgb_pipe,
    parse_ground_truth,
    read_ppm,
    write_ppm,
)
from .synthetic import DEFAULT_PALETTE, synthetic_frames, transition_frames

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_JND",
    "DEFAULT_PALETTE",
    "DEFAULT_SIGMA_MULTIPLIER",
    "CompressionStats",
    "DeltaSeries",
    "Frame",
    "GroundTruth",
    "KeyframeDetector",
    "KeyframeResult",
    "MatchReport",
    "PrismError",
    "ThroughputReport",
    "VideoMeta",
    "adaptive_stats",
    "build_delta_series",
    "ciede2000",
    "color_histogram",
    "compression",
    "cosine_similarity",
    "detect_keyframes",
    "fidelity",
    "fidelity_from_histograms",
    "frame_mean_lab",
    "load_frames_at",
    "load_ground_truth",
    "load_ground_truth_corpus",
    "match_count",
    "matching_threshold",
    "measure_throughput",
    "open_image_sequence",
    "open_raw_rgb_pipe",
    "parse_ground_truth",
    "read_delta_trace",
    "read_ppm",
    "resolve_threads",
    "score_matching",
    "select_keyframes",
    "srgb_to_lab",
    "synthetic_frames",
    "transition_frames",
    "write_delta_trace",
    "write_ppm",
    "__version__",
]
